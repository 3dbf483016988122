//! Cross-validated experiments: a kernel-learning method, a base-kernel
//! bank and a second-stage learner evaluated over rotating folds.
//!
//! Every rotation `r` of `k` folds tests on fold `r`, validates on fold
//! `r + 1 (mod k)` and trains on the rest. The bank is built once on the
//! full sample and restricted to the rows of each fold.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use centalign::alignment::{alignment_system, AlignmentSystem};
use centalign::data::{build_bank, load_dataset, BankConfig, DatasetConfig};
use centalign::kernel::{BaseKernelBank, Sample};
use centalign::predictors::{
    krr_fit, l1svm_learn, l2krr_learn, misclassification, onestage_learn, rmse, svm_fit, unif_weights, Model,
    OneStageConfig, OuterOptions, SvmOptions,
};
use centalign::rng::{seeded, stream_seed};
use centalign::two_stage::{align_weights, alignf_solve, alignf_weights, lq_weights, NnqpOptions, NormKind};
use centalign::Task;
use nalgebra::DVector;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::stats::{mean, std_dev};
use crate::SPEC_VERSION;

/// Allowed shortfall of `alignf` against `unif` on a training fold.
pub const DOMINANCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Unif,
    Align,
    Alignf,
    Lq { q: f64 },
    L1svm,
    L2krr,
    Onestage,
}

impl Method {
    fn check_task(self, task: Task) -> Result<()> {
        match (self, task) {
            (Method::L1svm, Task::Regression) => Err(HarnessError::usage("l1svm needs a classification task")),
            (Method::L2krr | Method::Onestage, Task::Classification) => {
                Err(HarnessError::usage(format!("{self} needs a regression task")))
            }
            _ => Ok(()),
        }
    }

    fn uses_radius(self) -> bool {
        self != Method::Onestage
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Unif => f.write_str("unif"),
            Method::Align => f.write_str("align"),
            Method::Alignf => f.write_str("alignf"),
            Method::Lq { q } => write!(f, "lq:{q}"),
            Method::L1svm => f.write_str("l1svm"),
            Method::L2krr => f.write_str("l2krr"),
            Method::Onestage => f.write_str("onestage"),
        }
    }
}

impl FromStr for Method {
    type Err = String;

    /// `unif`, `align`, `alignf`, `l1svm`, `l2krr`, `onestage` or `lq:<q>`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "unif" => Method::Unif,
            "align" => Method::Align,
            "alignf" => Method::Alignf,
            "l1svm" => Method::L1svm,
            "l2krr" => Method::L2krr,
            "onestage" => Method::Onestage,
            other => match other.strip_prefix("lq:").map(str::parse::<f64>) {
                Some(Ok(q)) => Method::Lq { q },
                _ => return Err(format!("unknown method {other:?}")),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaGrids {
    pub gamma: Vec<f64>,
    pub gamma_prime: Vec<f64>,
    pub gamma_dprime: Vec<f64>,
}

impl Default for GammaGrids {
    fn default() -> Self {
        GammaGrids { gamma: vec![1.0], gamma_prime: vec![1.0], gamma_dprime: vec![0.0] }
    }
}

fn default_folds() -> usize {
    5
}

fn default_unit_grid() -> Vec<f64> {
    vec![1.0]
}

fn default_c() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub bank: BankConfig,
    pub method: Method,
    /// Must match `dataset.task` when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// KRR ridge `λ₀` candidates.
    #[serde(default = "default_unit_grid")]
    pub lambda_grid: Vec<f64>,
    /// Mixture radius `Λ` candidates.
    #[serde(default = "default_unit_grid", alias = "Lambda_grid")]
    pub radius_grid: Vec<f64>,
    /// SVM box constraint.
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub onestage_gamma_grids: GammaGrids,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn task(&self) -> Task {
        self.dataset.task
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.task {
            if t != self.dataset.task {
                return Err(HarnessError::usage("task differs from dataset.task"));
            }
        }
        if self.folds < 3 {
            return Err(HarnessError::usage(format!(
                "folds must be ≥ 3 (test, validation and training folds are disjoint), got {}",
                self.folds
            )));
        }
        let positive = |name: &str, grid: &[f64]| -> Result<()> {
            if grid.is_empty() || grid.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(HarnessError::usage(format!("{name} must be a non-empty list of positive numbers")));
            }
            Ok(())
        };
        positive("lambda_grid", &self.lambda_grid)?;
        positive("radius_grid", &self.radius_grid)?;
        positive("c", &[self.c])?;
        let g = &self.onestage_gamma_grids;
        if g.gamma.is_empty() || g.gamma_prime.is_empty() || g.gamma_dprime.is_empty() {
            return Err(HarnessError::usage("onestage gamma grids must be non-empty"));
        }
        if let Method::Lq { q } = self.method {
            if !(q > 1.0) {
                return Err(HarnessError::usage(format!("lq needs q > 1, got {q}")));
            }
        }
        self.method.check_task(self.task())?;
        self.bank.validate()?;
        self.dataset.validate()?;
        Ok(())
    }

    /// Hyperparameter candidates in grid order.
    fn candidates(&self) -> Vec<Hyper> {
        let task = self.task();
        let mut out = Vec::new();
        if self.method == Method::Onestage {
            let g = &self.onestage_gamma_grids;
            for &a in &g.gamma {
                for &b in &g.gamma_prime {
                    for &c in &g.gamma_dprime {
                        out.push(Hyper { gammas: Some([a, b, c]), ..Hyper::default() });
                    }
                }
            }
            return out;
        }
        for &radius in &self.radius_grid {
            match task {
                Task::Classification => out.push(Hyper { radius: Some(radius), c: Some(self.c), ..Hyper::default() }),
                Task::Regression => {
                    for &l in &self.lambda_grid {
                        out.push(Hyper { radius: Some(radius), lambda0: Some(l), ..Hyper::default() });
                    }
                }
            }
        }
        out
    }
}

/// Hyperparameters of one grid point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// `(γ, γ′, γ″)` of the single-stage learner.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gammas: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub validation_size: usize,
    pub test_size: usize,
    pub chosen: Hyper,
    pub validation_error: f64,
    /// Misclassification fraction or RMSE on the test fold.
    pub test_error: f64,
    /// `ρ̂(K_μ, yyᵀ)` on the training folds; 0 when `μ = 0`.
    pub train_alignment: f64,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceCheck {
    pub fold: usize,
    pub alignf: f64,
    pub unif: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRun {
    pub spec_version: String,
    pub method: Method,
    pub task: Task,
    pub folds: usize,
    pub seed: u64,
    pub sample_size: usize,
    pub kernel_names: Vec<String>,
    pub fold_results: Vec<FoldResult>,
    pub mean_test_error: f64,
    pub std_test_error: f64,
    pub mean_train_alignment: f64,
    pub std_train_alignment: f64,
    /// Present for `align` and `alignf`.
    pub dominance: Vec<DominanceCheck>,
}

/// Wall-clock seconds, kept apart from the reproducible run record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_secs: f64,
    pub fold_secs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub run: ExperimentRun,
    pub timing: Timing,
}

/// Fold membership of every sample index: a seeded shuffle dealt
/// round-robin into `k` folds.
pub fn fold_assignment(m: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(&mut seeded(stream_seed(seed, 0xF01D)));
    let mut folds = vec![Vec::new(); k];
    for (j, &i) in perm.iter().enumerate() {
        folds[j % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

pub fn run_cv(cfg: &ExperimentConfig) -> Result<CvOutcome> {
    cfg.validate()?;
    let sample = load_dataset(&cfg.dataset)?;
    let bank = build_bank(&sample, &cfg.bank)?;
    run_cv_on(&sample, &bank, cfg)
}

/// Cross-validation on a prepared sample and bank; `cfg.dataset` and
/// `cfg.bank` only contribute the task.
pub fn run_cv_on(sample: &Sample, bank: &BaseKernelBank, cfg: &ExperimentConfig) -> Result<CvOutcome> {
    cfg.validate()?;
    if bank.sample_size() != sample.len() {
        return Err(centalign::Error::DimensionMismatch { expected: sample.len(), found: bank.sample_size() }.into());
    }
    let start = Instant::now();
    let m = sample.len();
    let k = cfg.folds;
    if m < 2 * k {
        return Err(HarnessError::usage(format!("{m} points are too few for {k} folds")));
    }
    let folds = fold_assignment(m, k, cfg.seed);
    let candidates = cfg.candidates();
    let y = sample.labels().as_slice();

    let results: Vec<(Result<(FoldResult, Option<DominanceCheck>)>, f64)> = (0..k)
        .into_par_iter()
        .map(|r| {
            let t0 = Instant::now();
            let out = run_rotation(r, &folds, bank, y, cfg, &candidates);
            (out, t0.elapsed().as_secs_f64())
        })
        .collect();

    let mut fold_results = Vec::with_capacity(k);
    let mut dominance = Vec::new();
    let mut fold_secs = Vec::with_capacity(k);
    for (out, secs) in results {
        let (fr, dom) = out?;
        fold_results.push(fr);
        dominance.extend(dom);
        fold_secs.push(secs);
    }
    let errors: Vec<f64> = fold_results.iter().map(|f| f.test_error).collect();
    let aligns: Vec<f64> = fold_results.iter().map(|f| f.train_alignment).collect();
    let run = ExperimentRun {
        spec_version: SPEC_VERSION.to_owned(),
        method: cfg.method,
        task: cfg.task(),
        folds: k,
        seed: cfg.seed,
        sample_size: m,
        kernel_names: bank.names().to_vec(),
        fold_results,
        mean_test_error: mean(&errors),
        std_test_error: std_dev(&errors),
        mean_train_alignment: mean(&aligns),
        std_train_alignment: std_dev(&aligns),
        dominance,
    };
    Ok(CvOutcome { run, timing: Timing { total_secs: start.elapsed().as_secs_f64(), fold_secs } })
}

fn fold_err(fold: usize) -> impl Fn(centalign::Error) -> HarnessError {
    move |source| HarnessError::Fold { fold, source }
}

fn run_rotation(
    r: usize,
    folds: &[Vec<usize>],
    bank: &BaseKernelBank,
    y: &[f64],
    cfg: &ExperimentConfig,
    candidates: &[Hyper],
) -> Result<(FoldResult, Option<DominanceCheck>)> {
    let k = folds.len();
    let test = &folds[r];
    let val = &folds[(r + 1) % k];
    let mut train: Vec<usize> = (0..k).filter(|&f| f != r && f != (r + 1) % k).flat_map(|f| folds[f].clone()).collect();
    train.sort_unstable();

    let err = fold_err(r);
    let train_bank = bank.subset(&train).map_err(&err)?;
    let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let y_val: Vec<f64> = val.iter().map(|&i| y[i]).collect();
    let y_test: Vec<f64> = test.iter().map(|&i| y[i]).collect();
    let system = alignment_system(&train_bank, &y_train).map_err(&err)?;
    let target_norm = centered_target_norm(&y_train);

    let fits: Vec<std::result::Result<(Vec<f64>, Model, f64), centalign::Error>> = candidates
        .par_iter()
        .map(|h| {
            let (mu, model) = learn(cfg.method, cfg.task(), &train_bank, &y_train, h)?;
            let e = evaluate(bank, &mu, &model, val, &train, &y_val, cfg.task())?;
            Ok((mu, model, e))
        })
        .collect();
    let mut best: Option<(usize, Vec<f64>, Model, f64)> = None;
    for (i, fit) in fits.into_iter().enumerate() {
        let (mu, model, e) = fit.map_err(&err)?;
        if best.as_ref().is_none_or(|b| e < b.3) {
            best = Some((i, mu, model, e));
        }
    }
    let (idx, mu, model, validation_error) = best.expect("at least one candidate");
    let test_error = evaluate(bank, &mu, &model, test, &train, &y_test, cfg.task()).map_err(&err)?;
    let train_alignment = alignment_or_zero(&system, &mu, target_norm);

    let dominance = match cfg.method {
        Method::Align | Method::Alignf => Some(dominance_check(r, &system, target_norm)?),
        _ => None,
    };
    let result = FoldResult {
        fold: r,
        train_size: train.len(),
        validation_size: val.len(),
        test_size: test.len(),
        chosen: candidates[idx],
        validation_error,
        test_error,
        train_alignment,
        weights: mu,
    };
    if !result.test_error.is_finite() || !result.train_alignment.is_finite() {
        return Err(HarnessError::Fold { fold: r, source: centalign::Error::Numeric("non-finite fold result".into()) });
    }
    Ok((result, dominance))
}

/// `‖(yyᵀ)_c‖_F = ‖y − ȳ1‖²`.
pub fn centered_target_norm(y: &[f64]) -> f64 {
    let v = DVector::from_column_slice(y);
    v.add_scalar(-v.mean()).norm_squared()
}

fn alignment_or_zero(system: &AlignmentSystem, mu: &[f64], target_norm: f64) -> f64 {
    if mu.iter().all(|&w| w == 0.0) {
        0.0
    } else {
        system.alignment_of(mu, target_norm)
    }
}

fn dominance_check(fold: usize, system: &AlignmentSystem, target_norm: f64) -> Result<DominanceCheck> {
    let sol = alignf_solve(system, NnqpOptions::default()).map_err(fold_err(fold))?;
    let alignf = system.alignment_of(sol.direction.as_slice(), target_norm);
    let unif = system.alignment_of(&vec![1.0; system.len()], target_norm);
    if alignf < unif - DOMINANCE_TOL {
        return Err(HarnessError::Dominance { fold, alignf, unif });
    }
    Ok(DominanceCheck { fold, alignf, unif })
}

/// Learns weights and the second-stage model on a training bank.
pub fn learn(
    method: Method,
    task: Task,
    bank: &BaseKernelBank,
    y: &[f64],
    h: &Hyper,
) -> std::result::Result<(Vec<f64>, Model), centalign::Error> {
    let radius = h.radius.unwrap_or(1.0);
    let svm_opts = SvmOptions { c: h.c.unwrap_or(1.0), ..SvmOptions::default() };
    let lambda0 = h.lambda0.unwrap_or(1.0);
    let weights = match method {
        Method::Unif => unif_weights(bank.len(), radius)?,
        Method::Align => align_weights(bank, y, radius)?,
        Method::Alignf => alignf_weights(bank, y, NormKind::L1, radius)?,
        Method::Lq { q } => lq_weights(bank, y, q, radius)?,
        Method::L1svm => {
            let fit = l1svm_learn(bank, y, svm_opts, radius, OuterOptions::default())?;
            return Ok((fit.weights.mu, fit.model.into()));
        }
        Method::L2krr => {
            let fit = l2krr_learn(bank, y, lambda0, radius, None, OuterOptions::default())?;
            return Ok((fit.weights.mu, fit.model.into()));
        }
        Method::Onestage => {
            let [g, gp, gdp] = h.gammas.unwrap_or([1.0, 1.0, 0.0]);
            let fit = onestage_learn(bank, y, &OneStageConfig::new(g, gp, gdp))?;
            return Ok((fit.weights.mu, fit.model.into()));
        }
    };
    let k = bank.combine(&weights.mu)?;
    let model = match task {
        Task::Classification => svm_fit(&k, y, svm_opts)?.into(),
        Task::Regression => krr_fit(&k, y, lambda0)?.into(),
    };
    Ok((weights.mu, model))
}

fn evaluate(
    bank: &BaseKernelBank,
    mu: &[f64],
    model: &Model,
    rows: &[usize],
    train: &[usize],
    y: &[f64],
    task: Task,
) -> std::result::Result<f64, centalign::Error> {
    let k = bank.combine(mu)?;
    let pred = model.predict(&k.block(rows, train))?;
    Ok(match task {
        Task::Classification => misclassification(&pred, y),
        Task::Regression => rmse(&pred, y),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsReport {
    pub spec_version: String,
    pub method: Method,
    pub kernel_names: Vec<String>,
    pub hyper: Hyper,
    pub weights: Vec<f64>,
    pub train_alignment: f64,
}

/// Weights learned on the full sample at the first grid point.
pub fn learn_full_weights(cfg: &ExperimentConfig) -> Result<WeightsReport> {
    cfg.validate()?;
    let sample = load_dataset(&cfg.dataset)?;
    let bank = build_bank(&sample, &cfg.bank)?;
    let y = sample.labels().as_slice();
    let hyper = cfg.candidates()[0];
    let (weights, _) = learn(cfg.method, cfg.task(), &bank, y, &hyper)?;
    let system = alignment_system(&bank, y)?;
    let train_alignment = alignment_or_zero(&system, &weights, centered_target_norm(y));
    let hyper = if cfg.method.uses_radius() { hyper } else { Hyper { radius: None, ..hyper } };
    Ok(WeightsReport {
        spec_version: SPEC_VERSION.to_owned(),
        method: cfg.method,
        kernel_names: bank.names().to_vec(),
        hyper,
        weights,
        train_alignment,
    })
}
