//! Configurations and drivers for the theory bench.

use centalign::alignment::{population_alignment, population_uncentered_alignment, FiniteDistribution};
use centalign::data::{load_dataset, DatasetConfig};
use centalign::kernel::{gram, KernelSpec, Sample};
use centalign::rng::{seeded, trial_seed};
use centalign::theory::{
    delta_mu_identity, g_star_diagnostics, predictor_diagnostics, qp_stability_check, DistributionSpec,
    GStarDiagnostics, GenBound, GenBoundInputs, PredictorDiagnostics, StabilityProbe,
};
use centalign::two_stage::NnqpOptions;
use centalign::Task;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConfig {
    pub dist: DistributionSpec,
    pub kernel: KernelSpec,
    pub m: usize,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorConfig {
    pub dataset: DatasetConfig,
    pub kernels: Vec<KernelSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorRow {
    pub kernel: String,
    pub diagnostics: PredictorDiagnostics,
    /// Classification only.
    pub g_star: Option<GStarDiagnostics>,
}

pub fn run_predictor(cfg: &PredictorConfig) -> Result<Vec<PredictorRow>> {
    let sample = load_dataset(&cfg.dataset)?;
    predictor_rows(&sample, &cfg.kernels, cfg.dataset.task)
}

pub fn predictor_rows(sample: &Sample, kernels: &[KernelSpec], task: Task) -> Result<Vec<PredictorRow>> {
    let y = sample.labels().as_slice();
    kernels
        .iter()
        .map(|spec| {
            let k = gram(spec, sample)?;
            let g_star = match task {
                Task::Classification => Some(g_star_diagnostics(&k, y)?),
                Task::Regression => None,
            };
            Ok(PredictorRow { kernel: spec.describe(), diagnostics: predictor_diagnostics(&k, y, task)?, g_star })
        })
        .collect()
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub dist: DistributionSpec,
    pub kernels: Vec<KernelSpec>,
    pub m: usize,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// QP solver tolerance; the inequality may fail by `10·tol`.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub trial: usize,
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// Residual of the `Δμ` identity; `None` when a solution is zero.
    pub identity_residual: Option<f64>,
    pub delta_mu_l1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub trials: usize,
    pub tol: f64,
    pub min_slack: f64,
    pub violations: usize,
    pub max_identity_residual: f64,
    pub rows: Vec<StabilityRow>,
}

const MAX_REDRAWS: usize = 1000;

/// Draws `S`, a position and a replacement until both samples give
/// non-degenerate centered kernels.
fn draw_probe(
    dist: &FiniteDistribution,
    cfg: &StabilityConfig,
    opts: NnqpOptions,
    rng: &mut impl Rng,
) -> Result<(usize, StabilityProbe)> {
    for _ in 0..MAX_REDRAWS {
        let s = dist.sample(cfg.m, rng)?;
        let index = rng.random_range(0..cfg.m);
        let atom = &dist.atoms()[dist.draw_index(rng)];
        match qp_stability_check(&cfg.kernels, &s, index, &atom.point, atom.label, opts) {
            Ok(probe) => return Ok((index, probe)),
            Err(centalign::Error::DegenerateKernel { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(centalign::Error::DegenerateKernel {
        indices: Vec::new(),
        reason: format!("no usable sample in {MAX_REDRAWS} draws"),
    }
    .into())
}

/// One-point perturbation trials of the alignment QP. Trial `t` uses the
/// generator seeded with `seed ⊕ t`.
pub fn run_stability(cfg: &StabilityConfig) -> Result<StabilityReport> {
    if cfg.kernels.is_empty() || cfg.m < 2 || cfg.trials == 0 {
        return Err(HarnessError::usage("stability needs kernels, m ≥ 2 and trials ≥ 1"));
    }
    let dist = cfg.dist.build()?;
    let opts = NnqpOptions { tol: cfg.tol, ..NnqpOptions::default() };
    let rows: Vec<Result<StabilityRow>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded(trial_seed(cfg.seed, t as u64));
            let (index, probe) = draw_probe(&dist, cfg, opts, &mut rng)?;
            let nonzero = |v: &[f64]| v.iter().any(|&x| x != 0.0);
            let identity_residual = if nonzero(&probe.v) && nonzero(&probe.v_prime) {
                Some(delta_mu_identity(&probe.v, &probe.v_prime)?)
            } else {
                None
            };
            Ok(StabilityRow {
                trial: t,
                index,
                lhs: probe.lhs,
                rhs: probe.rhs,
                slack: probe.slack,
                identity_residual,
                delta_mu_l1: probe.delta_mu.as_ref().map(|d| d.iter().map(|x| x.abs()).sum()),
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(StabilityReport {
        trials: cfg.trials,
        tol: cfg.tol,
        min_slack: rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min),
        violations: rows.iter().filter(|r| r.slack < -10.0 * cfg.tol).count(),
        max_identity_residual: rows.iter().filter_map(|r| r.identity_residual).fold(0.0, f64::max),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenBoundConfig {
    #[serde(flatten)]
    pub inputs: GenBoundInputs,
    pub m: usize,
    pub delta: f64,
}

pub fn run_genbound(cfg: &GenBoundConfig) -> Result<GenBound> {
    Ok(centalign::theory::generalization_bound_value(&cfg.inputs, cfg.m, cfg.delta)?)
}

fn default_alphas() -> Vec<f64> {
    (1..10).map(|i| i as f64 / 10.0).collect()
}

fn default_curve_kernel() -> KernelSpec {
    KernelSpec::Linear { offset: 1.0 }
}

/// Population alignments on the two-point family as `α` varies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveConfig {
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_curve_kernel")]
    pub kernel: KernelSpec,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig { alphas: default_alphas(), kernel: default_curve_kernel() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub alpha: f64,
    pub uncentered: f64,
    pub centered: f64,
}

pub fn alignment_curve(cfg: &CurveConfig) -> Result<Vec<CurvePoint>> {
    cfg.alphas
        .iter()
        .map(|&alpha| {
            let dist = FiniteDistribution::two_point(alpha)?;
            Ok(CurvePoint {
                alpha,
                uncentered: population_uncentered_alignment(&cfg.kernel, &dist)?,
                centered: population_alignment(&cfg.kernel, &dist)?,
            })
        })
        .collect()
}
