//! Cross-module invariants exercised through the public API.

use centalign::alignment::{alignment_report, alignment_system, centered_alignment};
use centalign::data::{load_dataset, DataSource, DatasetConfig, LabelColumn, Preprocessing};
use centalign::kernel::{center, BaseKernelBank, GramMatrix};
use centalign::predictors::{krr_fit, svm_fit, SvmOptions};
use centalign::theory::delta_mu_identity;
use centalign::two_stage::{align_weights, alignf_weights, nnqp_solve, NnqpOptions, NnqpProblem, NormKind};
use centalign::Task;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn psd(m: usize, rank: usize) -> impl Strategy<Value = GramMatrix> {
    prop::collection::vec(-1.0f64..1.0, m * rank).prop_map(move |v| {
        let b = DMatrix::from_vec(m, rank, v);
        GramMatrix::new(&b * b.transpose()).unwrap()
    })
}

fn labels(m: usize) -> impl Strategy<Value = Vec<f64>> {
    // both classes present
    prop::collection::vec(prop::bool::ANY, m).prop_map(|b| {
        let mut y: Vec<f64> = b.into_iter().map(|s| if s { 1.0 } else { -1.0 }).collect();
        y[0] = 1.0;
        y[1] = -1.0;
        y
    })
}

fn bank(m: usize, p: usize) -> impl Strategy<Value = BaseKernelBank> {
    prop::collection::vec(psd(m, 3), p).prop_map(|ks| BaseKernelBank::new(ks).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alignments_stay_in_range(k in psd(8, 3), kp in psd(8, 2)) {
        if let Ok(r) = alignment_report(&k, &kp) {
            prop_assert!(r.centered >= -1e-10 && r.centered <= 1.0 + 1e-10);
            prop_assert!(r.uncentered >= -1e-12 && r.uncentered <= 1.0 + 1e-12);
            prop_assert!(r.unnormalized >= -1e-12);
            let back = centered_alignment(&kp, &k).unwrap();
            prop_assert!((back - r.centered).abs() < 1e-12);
        }
    }

    #[test]
    fn centering_is_idempotent(k in psd(7, 4)) {
        let once = center(&k);
        let twice = center(&GramMatrix::new(once.matrix().clone()).unwrap());
        prop_assert!((once.matrix() - twice.matrix()).amax() < 1e-12);
        for i in 0..7 {
            prop_assert!(once.matrix().row(i).sum().abs() < 1e-12);
        }
    }

    #[test]
    fn first_stage_weights_are_feasible(b in bank(10, 4), y in labels(10), radius in 0.5f64..20.0) {
        if let Ok(w) = align_weights(&b, &y, radius) {
            prop_assert!(w.mu.iter().all(|&v| v >= -1e-12));
            prop_assert!((w.mu.iter().sum::<f64>() - radius).abs() < 1e-8 * radius);
        }
        for kind in [NormKind::L1, NormKind::L2] {
            if let Ok(w) = alignf_weights(&b, &y, kind, radius) {
                prop_assert!(w.mu.iter().all(|&v| v >= -1e-12));
                let norm = match kind {
                    NormKind::L1 => w.mu.iter().sum::<f64>(),
                    NormKind::L2 => w.mu.iter().map(|v| v * v).sum::<f64>().sqrt(),
                };
                prop_assert!((norm - radius).abs() < 1e-8 * radius);
            }
        }
    }

    #[test]
    fn alignf_dominates_every_single_kernel(b in bank(10, 3), y in labels(10)) {
        let sys = alignment_system(&b, &y).unwrap();
        let yc = {
            let m = y.iter().sum::<f64>() / y.len() as f64;
            y.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
        };
        if let Ok(w) = alignf_weights(&b, &y, NormKind::L1, 1.0) {
            let best = sys.alignment_of(&w.mu, yc);
            for k in 0..3 {
                let mut e = vec![0.0; 3];
                e[k] = 1.0;
                prop_assert!(best >= sys.alignment_of(&e, yc) - 1e-8);
            }
        }
    }

    #[test]
    fn nnqp_meets_kkt(bm in prop::collection::vec(-1.0f64..1.0, 20), a in prop::collection::vec(-1.0f64..1.0, 4)) {
        let b = DMatrix::from_vec(4, 5, bm);
        let m = &b * b.transpose();
        let a = DVector::from_vec(a);
        let sol = nnqp_solve(&NnqpProblem::new(m.clone(), a.clone()).unwrap(), NnqpOptions::default()).unwrap();
        let grad = 2.0 * (&m * &sol.v - &a);
        for k in 0..4 {
            prop_assert!(sol.v[k] >= 0.0);
            prop_assert!(grad[k] >= -1e-7);
            prop_assert!((sol.v[k] * grad[k]).abs() < 1e-7);
        }
    }

    #[test]
    fn delta_mu_identity_is_exact(v in prop::collection::vec(0.01f64..2.0, 1..6), shift in prop::collection::vec(-0.5f64..0.5, 6)) {
        let vp: Vec<f64> = v.iter().zip(&shift).map(|(a, s)| (a + s).max(0.0)).collect();
        prop_assume!(vp.iter().any(|&x| x > 0.0));
        prop_assert!(delta_mu_identity(&v, &vp).unwrap() < 1e-12);
    }

    #[test]
    fn krr_interpolates_as_lambda_vanishes(k in psd(6, 6), y in prop::collection::vec(-1.0f64..1.0, 6)) {
        prop_assume!(k.matrix().clone().symmetric_eigenvalues().min() > 1e-3);
        let fit = krr_fit(&k, &y, 1e-12).unwrap();
        let pred = fit.predict(k.matrix()).unwrap();
        prop_assert!((pred - DVector::from_vec(y)).amax() < 1e-6);
    }

    #[test]
    fn svm_dual_stays_in_box(k in psd(12, 4), y in labels(12), c in 0.1f64..10.0) {
        let opts = SvmOptions { c, ..SvmOptions::default() };
        if let Ok(model) = svm_fit(&k, &y, opts) {
            prop_assert!(model.alpha().iter().all(|&a| (-1e-12..=c + 1e-12).contains(&a)));
            prop_assert!(model.duality_gap() >= -1e-9);
        }
    }
}

#[test]
fn csv_labels_follow_the_named_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    std::fs::write(&path, "y,a,b\n1,0.5,2\n-1,1.5,4\n1,2.5,6\n").unwrap();
    let cfg = DatasetConfig {
        source: DataSource::Csv { path, label_column: LabelColumn::Name("y".into()) },
        task: Task::Classification,
        preprocessing: Preprocessing { standardize_features: true, ..Default::default() },
    };
    let s = load_dataset(&cfg).unwrap();
    assert_eq!(s.len(), 3);
    assert_eq!(s.dim(), 2);
    assert_eq!(s.labels().as_slice(), &[1.0, -1.0, 1.0]);
    for j in 0..2 {
        let col: Vec<f64> = (0..3).map(|i| s.point(i)[j]).collect();
        assert!(col.iter().sum::<f64>().abs() < 1e-12);
    }
}
