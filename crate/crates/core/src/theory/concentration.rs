//! Monte-Carlo checks of the concentration of `ρ̂` around `ρ` and of the
//! one-point perturbation and bias bounds for `⟨K_c, K′_c⟩/m²`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{quantile, DistributionSpec};
use crate::alignment::{centered_alignment, population_alignment, population_moments, target_kernel, FiniteDistribution};
use crate::kernel::{center, gram, GramMatrix, KernelSpec, Sample};
use crate::rng::{seeded, stream_seed, trial_seed};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationConfig {
    pub dist: DistributionSpec,
    pub kernel: KernelSpec,
    /// Bound on `K(x, x)`; defaults to the maximum over the support.
    #[serde(default)]
    pub r2: Option<f64>,
    /// Bound on `y²`; defaults to the maximum over the support.
    #[serde(default)]
    pub rp2: Option<f64>,
    pub delta: f64,
    pub sample_sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub m: usize,
    pub trials: usize,
    /// `18β[3/m + 8√(log(6/δ)/2m)]`
    pub bound: f64,
    /// Fraction of trials with `|ρ − ρ̂| ≤ bound`.
    pub coverage: f64,
    pub median_error: f64,
    pub mean_error: f64,
    pub max_error: f64,
    /// Trial average of `⟨K_c, K′_c⟩/m²`.
    pub mean_unnormalized: f64,
    /// `|E[K_c K′_c] − mean_unnormalized|`
    pub bias: f64,
    /// `18R²R′²/m`
    pub bias_bound: f64,
    /// Samples redrawn because `ρ̂` was undefined (a single label or a
    /// single distinct point).
    pub redraws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub population_rho: f64,
    pub population_unnormalized: f64,
    pub beta: f64,
    pub r2: f64,
    pub rp2: f64,
    pub delta: f64,
    pub seed: u64,
    pub rows: Vec<ConcentrationRow>,
}

fn resolve_bounds(cfg_r2: Option<f64>, cfg_rp2: Option<f64>, spec: &KernelSpec, dist: &FiniteDistribution) -> Result<(f64, f64)> {
    let max_k = dist.max_kernel_diagonal(spec);
    let max_y = dist.max_label_sq();
    let r2 = cfg_r2.unwrap_or(max_k);
    let rp2 = cfg_rp2.unwrap_or(max_y);
    if r2 < max_k * (1.0 - 1e-12) {
        return Err(Error::param(format!("r2 = {r2} is below max K(x, x) = {max_k} on the support")));
    }
    if rp2 < max_y * (1.0 - 1e-12) {
        return Err(Error::param(format!("rp2 = {rp2} is below max y² = {max_y} on the support")));
    }
    Ok((r2, rp2))
}

/// `ρ̂` and `⟨K_c, K′_c⟩/m²` for a sample, or `None` when `ρ̂` is undefined.
fn sample_statistics(spec: &KernelSpec, s: &Sample) -> Result<Option<(f64, f64)>> {
    let k = gram(spec, s)?;
    let ky = target_kernel(s.labels().as_slice());
    match centered_alignment(&k, &ky) {
        Ok(rho) => {
            let m = s.len() as f64;
            let b = centered_product(&k, &ky) / (m * m);
            Ok(Some((rho, b)))
        }
        Err(Error::DegenerateKernel { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `⟨K_c, K′_c⟩_F = ⟨K_c, K′⟩_F`.
fn centered_product(k: &GramMatrix, kp: &GramMatrix) -> f64 {
    crate::linalg::frobenius(center(k).matrix(), kp.matrix())
}

const MAX_REDRAWS: usize = 1000;

pub fn concentration_trial(cfg: &ConcentrationConfig) -> Result<ConcentrationReport> {
    let dist = cfg.dist.build()?;
    cfg.kernel.validate(dist.dim())?;
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1), got {}", cfg.delta)));
    }
    if cfg.trials < 100 {
        return Err(Error::param(format!("at least 100 trials are required, got {}", cfg.trials)));
    }
    if cfg.sample_sizes.is_empty() || cfg.sample_sizes.iter().any(|&m| m < 2) {
        return Err(Error::param("sample sizes must be non-empty and ≥ 2"));
    }
    let (r2, rp2) = resolve_bounds(cfg.r2, cfg.rp2, &cfg.kernel, &dist)?;
    let rho = population_alignment(&cfg.kernel, &dist)?;
    let moments = population_moments(&cfg.kernel, &dist, true)?;
    let rr = r2 * rp2;
    let beta = (rr / moments.kernel).max(rr / moments.target);

    let mut rows = Vec::with_capacity(cfg.sample_sizes.len());
    for &m in &cfg.sample_sizes {
        let base = stream_seed(cfg.seed, m as u64);
        let per_trial: Vec<(f64, f64, usize)> = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = seeded(trial_seed(base, t));
                for redraw in 0..MAX_REDRAWS {
                    let s = dist.sample(m, &mut rng)?;
                    if let Some((rho_hat, b)) = sample_statistics(&cfg.kernel, &s)? {
                        return Ok(((rho - rho_hat).abs(), b, redraw));
                    }
                }
                Err(Error::degenerate(format!("sample alignment undefined in {MAX_REDRAWS} draws at m = {m}")))
            })
            .collect::<Result<_>>()?;
        let errors: Vec<f64> = per_trial.iter().map(|r| r.0).collect();
        let mf = m as f64;
        let bound = 18.0 * beta * (3.0 / mf + 8.0 * ((6.0 / cfg.delta).ln() / (2.0 * mf)).sqrt());
        let covered = errors.iter().filter(|&&e| e <= bound).count();
        let mean_unnormalized = per_trial.iter().map(|r| r.1).sum::<f64>() / cfg.trials as f64;
        rows.push(ConcentrationRow {
            m,
            trials: cfg.trials,
            bound,
            coverage: covered as f64 / cfg.trials as f64,
            median_error: quantile(&errors, 0.5),
            mean_error: errors.iter().sum::<f64>() / cfg.trials as f64,
            max_error: errors.iter().copied().fold(0.0, f64::max),
            mean_unnormalized,
            bias: (moments.cross - mean_unnormalized).abs(),
            bias_bound: 18.0 * rr / mf,
            redraws: per_trial.iter().map(|r| r.2).sum(),
        });
    }
    Ok(ConcentrationReport {
        population_rho: rho,
        population_unnormalized: moments.cross,
        beta,
        r2,
        rp2,
        delta: cfg.delta,
        seed: cfg.seed,
        rows,
    })
}

/// `|Δ⟨K_c, K′_c⟩|/m²` when point `index` of `s` is replaced, with `K′`
/// the target kernel.
pub fn one_point_delta(spec: &KernelSpec, s: &Sample, index: usize, point: &[f64], label: f64) -> Result<f64> {
    if index >= s.len() {
        return Err(Error::param(format!("index {index} out of range for sample of size {}", s.len())));
    }
    if point.len() != s.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), found: point.len() });
    }
    let mut points = s.points().clone();
    let mut labels = s.labels().clone();
    for (j, &v) in point.iter().enumerate() {
        points[(index, j)] = v;
    }
    labels[index] = label;
    let s2 = Sample::new(points, labels)?;
    let value = |s: &Sample| -> Result<f64> {
        let k = gram(spec, s)?;
        Ok(centered_product(&k, &target_kernel(s.labels().as_slice())))
    };
    let m = s.len() as f64;
    Ok((value(&s2)? - value(s)?).abs() / (m * m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub m: usize,
    pub trials: usize,
    /// `24R²R′²/m`
    pub bound: f64,
    pub max_ratio: f64,
    pub violations: usize,
    pub seed: u64,
}

impl PerturbationReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Draws `S`, replaces a uniformly chosen point by a fresh draw and
/// compares the change of `⟨K_c, K′_c⟩/m²` with `24R²R′²/m`.
pub fn perturbation_check(
    dist: &FiniteDistribution,
    spec: &KernelSpec,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<PerturbationReport> {
    use rand::Rng;
    if m < 2 {
        return Err(Error::param(format!("m must be ≥ 2, got {m}")));
    }
    spec.validate(dist.dim())?;
    let (r2, rp2) = resolve_bounds(None, None, spec, dist)?;
    let bound = 24.0 * r2 * rp2 / m as f64;
    let ratios: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded(trial_seed(seed, t));
            let s = dist.sample(m, &mut rng)?;
            let idx = rng.random_range(0..m);
            let atom = &dist.atoms()[dist.draw_index(&mut rng)];
            let delta = one_point_delta(spec, &s, idx, &atom.point, atom.label)?;
            Ok(if bound > 0.0 { delta / bound } else { 0.0 })
        })
        .collect::<Result<_>>()?;
    Ok(PerturbationReport {
        m,
        trials,
        bound,
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        violations: ratios.iter().filter(|&&r| r > 1.0).count(),
        seed,
    })
}
