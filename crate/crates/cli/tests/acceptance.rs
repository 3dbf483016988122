//! Acceptance suite. Each test checks one criterion and writes a single
//! `PASS`/`FAIL` line to stderr (uncaptured, so it shows in plain
//! `cargo test` output).

use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use centalign::alignment::{
    alignment_system, population_alignment, population_uncentered_alignment, Atom, AlignmentSystem,
    FiniteDistribution,
};
use centalign::data::{
    build_bank, load_dataset, synthesize, BankConfig, BankFamily, DataSource, DatasetConfig, LabelColumn,
    Normalization, Preprocessing, SyntheticGenerator,
};
use centalign::kernel::{gram, BaseKernelBank, GramMatrix, KernelSpec, Sample};
use centalign::predictors::{
    krr_fit, l1svm_learn, l2krr_learn, onestage_learn, unif_weights, OneStageConfig, OneStageObjective,
    OuterOptions, SvmOptions,
};
use centalign::rng::seeded;
use centalign::theory::{concentration_trial, delta_mu_identity, predictor_diagnostics, ConcentrationConfig, DistributionSpec};
use centalign::two_stage::{
    align_weights, alignf_solve, alignf_weights, linear_combination_from_system, nnqp_solve, rho0_direct,
    rho0_of_solution, NnqpOptions, NnqpProblem, NormKind,
};
use centalign::Task;
use centalign_cli::bench::{run_stability, StabilityConfig};
use centalign_cli::experiment::{centered_target_norm, fold_assignment, run_cv, run_cv_on, ExperimentConfig, GammaGrids, Method};
use centalign_cli::stats::{mean, std_dev};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn report(id: u32, name: &str, started: Instant, limit: Option<Duration>, outcome: Result<String, String>) {
    let elapsed = started.elapsed();
    let outcome = match (outcome, limit) {
        (Ok(_), Some(l)) if elapsed > l => Err(format!("runtime {elapsed:.2?} exceeds {l:?}")),
        (o, _) => o,
    };
    let line = match &outcome {
        Ok(detail) => format!("PASS [{id:>2}] {name}: {detail} ({elapsed:.2?})"),
        Err(detail) => format!("FAIL [{id:>2}] {name}: {detail} ({elapsed:.2?})"),
    };
    let _ = writeln!(std::io::stderr(), "{line}");
    assert!(outcome.is_ok(), "{line}");
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bundled_csv() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/circles350.csv")
}

fn random_pd(rng: &mut impl Rng, p: usize, extra: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(p, p + extra, |_, _| rng.random_range(-1.0..1.0));
    &b * b.transpose()
}

#[test]
fn criterion_01_two_point_curve() {
    let t = Instant::now();
    let spec = KernelSpec::Linear { offset: 1.0 };
    let outcome = (|| {
        let mut worst = 0.0f64;
        for i in 1..10 {
            let alpha = i as f64 / 10.0;
            let dist = FiniteDistribution::two_point(alpha).map_err(|e| e.to_string())?;
            let a = population_uncentered_alignment(&spec, &dist).map_err(|e| e.to_string())?;
            let rho = population_alignment(&spec, &dist).map_err(|e| e.to_string())?;
            let expected = (alpha * alpha + (1.0 - alpha) * (1.0 - alpha)).sqrt();
            worst = worst.max((a - expected).abs()).max((rho - 1.0).abs());
        }
        ensure(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
        Ok(format!("9 values of alpha, max deviation {worst:.1e}"))
    })();
    report(1, "two-point alignment curve", t, Some(Duration::from_secs(1)), outcome);
}

/// Minimum of `vᵀMv − 2vᵀa` over `v ≥ 0` by trying every support set.
fn enumerate_active_sets(m: &DMatrix<f64>, a: &DVector<f64>) -> f64 {
    let p = a.len();
    let mut best = 0.0f64;
    for mask in 1u32..(1 << p) {
        let idx: Vec<usize> = (0..p).filter(|k| mask & (1 << k) != 0).collect();
        let ms = DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])]);
        let as_ = DVector::from_fn(idx.len(), |i, _| a[idx[i]]);
        let Some(x) = ms.clone().lu().solve(&as_) else { continue };
        if x.iter().any(|&v| v < 0.0) {
            continue;
        }
        let f = x.dot(&(&ms * &x)) - 2.0 * x.dot(&as_);
        best = best.min(f);
    }
    best
}

#[test]
fn criterion_02_qp_oracle() {
    let t = Instant::now();
    let mut rng = seeded(202);
    let mut worst = 0.0f64;
    let mut outcome = Ok(());
    for i in 0..200 {
        let p = 2 + i % 3;
        let extra = rng.random_range(0..3);
        let m = random_pd(&mut rng, p, extra);
        let a = DVector::from_fn(p, |_, _| rng.random_range(-1.0..1.0));
        let sol = match NnqpProblem::new(m.clone(), a.clone()).and_then(|q| nnqp_solve(&q, NnqpOptions::default())) {
            Ok(s) => s,
            Err(e) => {
                outcome = Err(format!("instance {i}: {e}"));
                break;
            }
        };
        let gap = (sol.objective - enumerate_active_sets(&m, &a)).abs();
        worst = worst.max(gap);
    }
    let outcome = outcome.and_then(|_| {
        ensure(worst <= 1e-8, || format!("max objective gap {worst:e}"))?;
        Ok(format!("200 instances, max objective gap {worst:.1e}"))
    });
    report(2, "NNQP vs active-set enumeration", t, Some(Duration::from_secs(10)), outcome);
}

#[test]
fn criterion_03_closed_form_consistency() {
    let t = Instant::now();
    let mut rng = seeded(303);
    let (mut tested, mut worst_dir, mut worst_rho) = (0usize, 0.0f64, 0.0f64);
    let outcome = (|| {
        for i in 0..400 {
            let p = 2 + i % 4;
            let m = random_pd(&mut rng, p, 3);
            // half the instances are built to pass the filter
            let a = if i % 2 == 0 {
                &m * DVector::from_fn(p, |_, _| rng.random_range(0.05..1.0))
            } else {
                DVector::from_fn(p, |_, _| rng.random_range(-0.2..1.0))
            };
            let system = AlignmentSystem {
                min_eigenvalue: m.symmetric_eigenvalues().min(),
                a: a.clone(),
                m: m.clone(),
            };
            let x = m.clone().lu().solve(&a).ok_or("singular instance")?;
            if x.iter().any(|&v| v < 0.0) {
                continue;
            }
            tested += 1;
            let sol = alignf_solve(&system, NnqpOptions::default()).map_err(|e| e.to_string())?;
            let lin = linear_combination_from_system(&system).map_err(|e| e.to_string())?;
            let xdir = &x / x.norm();
            worst_dir = worst_dir.max((&sol.direction - &xdir).norm()).max((&lin.mu - &xdir).norm());
            let rho0 = rho0_of_solution(&sol.v, &m).map_err(|e| e.to_string())?;
            worst_rho = worst_rho.max((rho0 - rho0_direct(&sol.direction, &system)).abs());
        }
        ensure(tested >= 100, || format!("only {tested} instances passed the filter"))?;
        ensure(worst_dir <= 1e-8, || format!("direction deviation {worst_dir:e}"))?;
        ensure(worst_rho <= 1e-8, || format!("rho0 deviation {worst_rho:e}"))?;
        Ok(format!("{tested} filtered instances, direction {worst_dir:.1e}, rho0 {worst_rho:.1e}"))
    })();
    report(3, "closed-form consistency", t, None, outcome);
}

fn synthetic_bank(seed: u64) -> (Sample, BaseKernelBank) {
    let sample = synthesize(&SyntheticGenerator::Circles { m: 60, noise: 0.3, noise_dims: (seed % 4) as usize }, seed).unwrap();
    let cfg = BankConfig {
        family: BankFamily::GaussianGrid { gamma0: -3, gamma1: 2 },
        normalize: Normalization { trace_one: true, frobenius_one: false },
        center: true,
    };
    let bank = build_bank(&sample, &cfg).unwrap();
    (sample, bank)
}

#[test]
fn criterion_04_maximizer_dominance() {
    let t = Instant::now();
    let outcome = (|| {
        let mut checks = 0;
        let mut min_margin_align = f64::INFINITY;
        let mut min_margin_unif = f64::INFINITY;
        for seed in 0..20u64 {
            let (sample, bank) = synthetic_bank(1000 + seed);
            ensure(bank.len() == 6 && sample.len() == 60, || "bank shape".into())?;
            let y = sample.labels().as_slice();
            let folds = fold_assignment(60, 5, seed);
            for r in 0..5 {
                let mut train: Vec<usize> =
                    (0..5).filter(|&f| f != r && f != (r + 1) % 5).flat_map(|f| folds[f].clone()).collect();
                train.sort_unstable();
                let tb = bank.subset(&train).map_err(|e| e.to_string())?;
                let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
                let sys = alignment_system(&tb, &yt).map_err(|e| e.to_string())?;
                let norm = centered_target_norm(&yt);
                let rho = |mu: &[f64]| sys.alignment_of(mu, norm);
                let rf = rho(&alignf_weights(&tb, &yt, NormKind::L1, 1.0).map_err(|e| e.to_string())?.mu);
                let ra = rho(&align_weights(&tb, &yt, 1.0).map_err(|e| e.to_string())?.mu);
                let ru = rho(&unif_weights(6, 1.0).map_err(|e| e.to_string())?.mu);
                ensure(rf >= ra && ra >= 0.0 && rf >= ru - 1e-8, || {
                    format!("bank {seed} fold {r}: alignf {rf}, align {ra}, unif {ru}")
                })?;
                min_margin_align = min_margin_align.min(rf - ra);
                min_margin_unif = min_margin_unif.min(rf - ru);
                checks += 1;
            }
            // the harness re-checks dominance on every fold
            let mut cfg = experiment_config(Method::Alignf);
            cfg.seed = seed;
            run_cv_on(&sample, &bank, &cfg).map_err(|e| e.to_string())?;
        }
        Ok(format!(
            "{checks} folds, min alignf−align {min_margin_align:.1e}, min alignf−unif {min_margin_unif:.1e}"
        ))
    })();
    report(4, "maximizer dominance", t, None, outcome);
}

#[test]
fn criterion_05_concentration_coverage() {
    let t = Instant::now();
    let cfg = ConcentrationConfig {
        dist: DistributionSpec::TwoPointNoisy { alpha: 0.3, flip: 0.2 },
        kernel: KernelSpec::Linear { offset: 1.0 },
        r2: None,
        rp2: None,
        delta: 0.05,
        sample_sizes: vec![25, 100, 400],
        trials: 500,
        seed: 505,
    };
    let outcome = concentration_trial(&cfg).map_err(|e| e.to_string()).and_then(|rep| {
        for row in &rep.rows {
            ensure(row.coverage >= 0.95, || format!("coverage {} at m = {}", row.coverage, row.m))?;
        }
        let ratio = rep.rows[2].median_error / rep.rows[1].median_error;
        ensure(ratio <= 0.6, || format!("median ratio m=400/m=100 is {ratio:.3}"))?;
        let cov: Vec<String> = rep.rows.iter().map(|r| format!("{}:{:.3}", r.m, r.coverage)).collect();
        Ok(format!("coverage {}, median ratio {ratio:.3}", cov.join(" ")))
    });
    report(5, "concentration coverage", t, Some(Duration::from_secs(60)), outcome);
}

fn corpus() -> Vec<(String, Sample, Task)> {
    let classification = |source| DatasetConfig { source, task: Task::Classification, preprocessing: Preprocessing::default() };
    let mut bundled = classification(DataSource::Csv { path: bundled_csv(), label_column: LabelColumn::Name("y".into()) });
    bundled.preprocessing.standardize_features = true;
    let two_point = classification(DataSource::Synthetic {
        generator: SyntheticGenerator::TwoPoint { alpha: 0.5, m: 100 },
        seed: 6,
    });
    let circles = classification(DataSource::Synthetic {
        generator: SyntheticGenerator::Circles { m: 120, noise: 0.2, noise_dims: 1 },
        seed: 6,
    });
    let regression = DatasetConfig {
        source: DataSource::Synthetic { generator: SyntheticGenerator::Regression { m: 150, d: 3, noise: 0.2 }, seed: 6 },
        task: Task::Regression,
        preprocessing: Preprocessing { standardize_features: true, center_labels: true, unit_second_moment: true },
    };
    [("bundled circles350", bundled), ("two_point", two_point), ("circles", circles), ("regression", regression)]
        .into_iter()
        .map(|(n, c)| (n.to_string(), load_dataset(&c).unwrap(), c.task))
        .collect()
}

#[test]
fn criterion_06_h_identity_and_bounds() {
    let t = Instant::now();
    let outcome = (|| {
        let (mut worst_id, mut worst_bound, mut count) = (0.0f64, f64::NEG_INFINITY, 0);
        for (name, sample, task) in corpus() {
            let y = sample.labels().as_slice();
            let mut kernels: Vec<GramMatrix> = (-4..=1)
                .map(|g| gram(&KernelSpec::Gaussian { gamma: 2f64.powi(g) }, &sample).unwrap())
                .collect();
            kernels.push(gram(&KernelSpec::Linear { offset: 1.0 }, &sample).unwrap());
            let bank = BaseKernelBank::new(kernels.clone()).map_err(|e| e.to_string())?;
            let mu = alignf_weights(&bank, y, NormKind::L1, 1.0).map_err(|e| e.to_string())?.mu;
            kernels.push(bank.combine(&mu).map_err(|e| e.to_string())?);
            for k in &kernels {
                let d = match predictor_diagnostics(k, y, task) {
                    Ok(d) => d,
                    Err(centalign::Error::DegenerateKernel { .. }) => continue,
                    Err(e) => return Err(format!("{name}: {e}")),
                };
                worst_id = worst_id.max((d.mean_margin - d.rho_hat).abs());
                worst_bound = worst_bound.max(d.empirical_error - d.bound_value);
                count += 1;
            }
        }
        ensure(worst_id <= 1e-9, || format!("identity residual {worst_id:e}"))?;
        ensure(worst_bound <= 1e-8, || format!("bound exceeded by {worst_bound:e}"))?;
        Ok(format!("{count} kernels on 4 datasets, identity {worst_id:.1e}, max error−bound {worst_bound:.3}"))
    })();
    report(6, "h_S identity and error bounds", t, None, outcome);
}

#[test]
fn criterion_07_stability_checks() {
    let t = Instant::now();
    let outcome = (|| {
        let mut rng = seeded(707);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let p = rng.random_range(1..8);
            let v: Vec<f64> = (0..p).map(|_| rng.random_range(0.0..1.0)).collect();
            let vp: Vec<f64> = v.iter().map(|x| (x + rng.random_range(-0.3..0.3)).max(0.0) + 1e-3).collect();
            worst = worst.max(delta_mu_identity(&v, &vp).map_err(|e| e.to_string())?);
        }
        ensure(worst <= 1e-12, || format!("identity residual {worst:e}"))?;

        let atoms = (0..8)
            .map(|i| {
                let th = i as f64 * 0.8;
                Atom { point: vec![th.cos() * (1.0 + 0.1 * i as f64), th.sin()], label: if i % 3 == 0 { -1.0 } else { 1.0 }, mass: 0.125 }
            })
            .collect();
        let cfg = StabilityConfig {
            dist: DistributionSpec::Atoms(atoms),
            kernels: vec![
                KernelSpec::Gaussian { gamma: 0.25 },
                KernelSpec::Gaussian { gamma: 1.0 },
                KernelSpec::Gaussian { gamma: 4.0 },
                KernelSpec::Linear { offset: 1.0 },
            ],
            m: 20,
            trials: 500,
            seed: 77,
            tol: 1e-10,
        };
        let rep = run_stability(&cfg).map_err(|e| e.to_string())?;
        ensure(rep.violations == 0, || format!("{} violations, min slack {:e}", rep.violations, rep.min_slack))?;
        Ok(format!(
            "identity {worst:.1e} on 1000 pairs; 500 QP trials, min slack {:.1e}",
            rep.min_slack
        ))
    })();
    report(7, "stability identity and QP inequality", t, None, outcome);
}

/// Gaussian elimination with partial pivoting.
fn dense_solve(mut a: DMatrix<f64>, mut b: DVector<f64>) -> DVector<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs())).unwrap();
        a.swap_rows(col, piv);
        b.swap_rows(col, piv);
        for row in col + 1..n {
            let f = a[(row, col)] / a[(col, col)];
            for k in col..n {
                a[(row, k)] -= f * a[(col, k)];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = DVector::zeros(n);
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[(row, k)] * x[k]).sum();
        x[row] = (b[row] - s) / a[(row, row)];
    }
    x
}

/// Minimizes `f` over a box by repeated grid zooming.
fn grid_oracle(f: &dyn Fn(&[f64]) -> f64, dims: usize, hi: f64) -> f64 {
    let n: usize = 41;
    let mut lo_b = vec![0.0; dims];
    let mut hi_b = vec![hi; dims];
    let mut best = (f64::INFINITY, vec![0.0; dims]);
    for _ in 0..30 {
        let total = n.pow(dims as u32);
        for idx in 0..total {
            let mut rem = idx;
            let pt: Vec<f64> = (0..dims)
                .map(|d| {
                    let i = rem % n;
                    rem /= n;
                    lo_b[d] + (hi_b[d] - lo_b[d]) * i as f64 / (n - 1) as f64
                })
                .collect();
            let v = f(&pt);
            if v < best.0 {
                best = (v, pt);
            }
        }
        for d in 0..dims {
            let w = (hi_b[d] - lo_b[d]) / 8.0;
            lo_b[d] = (best.1[d] - w).max(0.0);
            hi_b[d] = best.1[d] + w;
        }
    }
    best.0
}

#[test]
fn criterion_08_learner_oracles() {
    let t = Instant::now();
    let outcome = (|| {
        let mut rng = seeded(808);
        let mut krr_dev = 0.0f64;
        for _ in 0..50 {
            let m = rng.random_range(3..25);
            let b = DMatrix::from_fn(m, rng.random_range(1..m + 3), |_, _| rng.random_range(-1.0..1.0));
            let k = GramMatrix::new(&b * b.transpose()).map_err(|e| e.to_string())?;
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lambda0 = rng.random_range(0.01..1.0);
            let fit = krr_fit(&k, &y, lambda0).map_err(|e| e.to_string())?;
            let lhs = k.matrix() + DMatrix::identity(m, m) * (m as f64 * lambda0);
            let oracle = dense_solve(lhs, DVector::from_column_slice(&y));
            krr_dev = krr_dev.max((fit.alpha() - oracle).amax());
        }
        ensure(krr_dev <= 1e-10, || format!("KRR deviation {krr_dev:e}"))?;

        let mut onestage_gap = 0.0f64;
        for (seed, p) in [(1u64, 1usize), (2, 1), (3, 2), (4, 2)] {
            let sample = synthesize(&SyntheticGenerator::Regression { m: 30, d: 2, noise: 0.2 }, seed).unwrap();
            let y: Vec<f64> = {
                let l = sample.labels();
                l.iter().map(|v| v - l.mean()).collect()
            };
            let kernels = [0.5, 4.0][..p]
                .iter()
                .map(|&g| centalign::kernel::trace_normalize(&gram(&KernelSpec::Gaussian { gamma: g }, &sample).unwrap()).unwrap())
                .collect();
            let bank = BaseKernelBank::new(kernels).map_err(|e| e.to_string())?;
            let cfg = OneStageConfig::new(1.0, 0.5, 0.1);
            let fit = onestage_learn(&bank, &y, &cfg).map_err(|e| e.to_string())?;
            let obj = OneStageObjective::new(&bank, &y, &cfg).map_err(|e| e.to_string())?;
            let learned = obj.value(&fit.weights.mu).map_err(|e| e.to_string())?;
            let oracle = grid_oracle(&|mu| obj.value(mu).unwrap(), p, 10.0);
            onestage_gap = onestage_gap.max((learned - oracle).abs());
            monotone(&fit.objective_trace).map_err(|e| format!("onestage: {e}"))?;
        }
        ensure(onestage_gap <= 1e-4, || format!("onestage objective gap {onestage_gap:e}"))?;

        let (sample, bank) = synthetic_bank(88);
        let y = sample.labels().as_slice();
        let l1 = l1svm_learn(&bank, y, SvmOptions::default(), 50.0, OuterOptions::default()).map_err(|e| e.to_string())?;
        monotone(&l1.objective_trace).map_err(|e| format!("l1svm: {e}"))?;
        let l2 = l2krr_learn(&bank, y, 0.01, 1.0, None, OuterOptions::default()).map_err(|e| e.to_string())?;
        monotone(&l2.objective_trace).map_err(|e| format!("l2krr: {e}"))?;
        let sys = alignment_system(&bank, y).map_err(|e| e.to_string())?;
        let qp = nnqp_solve(&NnqpProblem::new(sys.m, sys.a).map_err(|e| e.to_string())?, NnqpOptions::default())
            .map_err(|e| e.to_string())?;
        monotone(&qp.objective_trace).map_err(|e| format!("nnqp: {e}"))?;
        Ok(format!("KRR {krr_dev:.1e}, onestage gap {onestage_gap:.1e}, 4 objective traces monotone"))
    })();
    report(8, "learner oracles and monotone objectives", t, None, outcome);
}

fn monotone(trace: &[f64]) -> Result<(), String> {
    match trace.windows(2).position(|w| w[1] > w[0]) {
        Some(i) => Err(format!("objective rises at step {}: {} -> {}", i + 1, trace[i], trace[i + 1])),
        None => Ok(()),
    }
}

fn experiment_config(method: Method) -> ExperimentConfig {
    ExperimentConfig {
        dataset: DatasetConfig {
            source: DataSource::Csv { path: bundled_csv(), label_column: LabelColumn::Name("y".into()) },
            task: Task::Classification,
            preprocessing: Preprocessing { standardize_features: true, ..Default::default() },
        },
        bank: BankConfig {
            family: BankFamily::GaussianGrid { gamma0: -8, gamma1: 1 },
            normalize: Normalization { trace_one: true, frobenius_one: false },
            center: true,
        },
        method,
        task: None,
        folds: 5,
        lambda_grid: vec![1.0],
        radius_grid: vec![1.0, 10.0, 100.0, 1000.0, 10000.0],
        c: 1.0,
        onestage_gamma_grids: GammaGrids::default(),
        seed: 7,
    }
}

#[test]
fn criterion_09_directional_experiment() {
    let t = Instant::now();
    let outcome = (|| {
        let f = run_cv(&experiment_config(Method::Alignf)).map_err(|e| e.to_string())?.run;
        let u = run_cv(&experiment_config(Method::Unif)).map_err(|e| e.to_string())?.run;
        ensure(f.sample_size == 350, || format!("bundled set has {} points", f.sample_size))?;
        let fe: Vec<f64> = f.fold_results.iter().map(|r| r.test_error).collect();
        let ue: Vec<f64> = u.fold_results.iter().map(|r| r.test_error).collect();
        let pooled = ((std_dev(&fe).powi(2) + std_dev(&ue).powi(2)) / 2.0).sqrt();
        ensure(f.mean_train_alignment > u.mean_train_alignment, || {
            format!("alignment alignf {} vs unif {}", f.mean_train_alignment, u.mean_train_alignment)
        })?;
        ensure(mean(&fe) <= mean(&ue) + pooled, || {
            format!("error alignf {} vs unif {} + pooled std {pooled}", mean(&fe), mean(&ue))
        })?;
        Ok(format!(
            "alignment {:.4} vs {:.4}, error {:.4} vs {:.4} (pooled std {pooled:.4})",
            f.mean_train_alignment,
            u.mean_train_alignment,
            mean(&fe),
            mean(&ue)
        ))
    })();
    report(9, "alignf vs unif on the bundled set", t, Some(Duration::from_secs(120)), outcome);
}

#[test]
fn criterion_10_regularization_path() {
    let t = Instant::now();
    let outcome = (|| {
        let mut rng = seeded(1010);
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let m = rng.random_range(2..20);
            let b = DMatrix::from_fn(m + 4, rng.random_range(1..6), |_, _| rng.random_range(-1.0..1.0));
            let full = &b * b.transpose();
            let train: Vec<usize> = (0..m).collect();
            let test: Vec<usize> = (m..m + 4).collect();
            let k = GramMatrix::new(DMatrix::from_fn(m, m, |i, j| full[(i, j)])).map_err(|e| e.to_string())?;
            let cross = DMatrix::from_fn(4, m, |i, j| full[(test[i], train[j])]);
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let scale = 10f64.powf(rng.random_range(-2.0..2.0));
            let lambda = rng.random_range(0.01..1.0);
            let scaled = krr_fit(&k.scaled(scale), &y, lambda).map_err(|e| e.to_string())?;
            let plain = krr_fit(&k, &y, lambda / scale).map_err(|e| e.to_string())?;
            let d = (scaled.predict(&(&cross * scale)).unwrap() - plain.predict(&cross).unwrap()).amax();
            worst = worst.max(d);
        }
        ensure(worst <= 1e-10, || format!("max prediction gap {worst:e}"))?;
        Ok(format!("200 instances, max prediction gap {worst:.1e}"))
    })();
    report(10, "KRR regularization path", t, None, outcome);
}
