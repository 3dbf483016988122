//! Kernel learners that pick `μ` and the predictor jointly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::krr::{krr_fit_ridge, KrrModel};
use super::pgd::{self, PgOptions, PgOutcome};
use super::svm::{svm_fit_warm, SvmModel, SvmOptions};
use crate::alignment::alignment_system;
use crate::kernel::BaseKernelBank;
use crate::two_stage::{MixtureWeights, NormKind};
use crate::{Error, Result};

/// Learned weights, the second-stage model at those weights, and the
/// outer objective after every accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct JointFit<M> {
    pub weights: MixtureWeights,
    pub model: M,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub stalled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OuterOptions {
    fn default() -> Self {
        OuterOptions { tol: 1e-6, max_iter: 500 }
    }
}

impl OuterOptions {
    fn pg(self) -> PgOptions {
        PgOptions { tol: self.tol, max_iter: self.max_iter, ..PgOptions::default() }
    }
}

fn combine(bank: &BaseKernelBank, mu: &DVector<f64>) -> Result<DMatrix<f64>> {
    Ok(bank.combine(mu.as_slice())?.into_matrix())
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::param(format!("Lambda must be > 0, got {radius}")));
    }
    Ok(())
}

fn check_len(bank: &BaseKernelBank, y: &[f64]) -> Result<()> {
    if y.len() != bank.sample_size() {
        return Err(Error::DimensionMismatch { expected: bank.sample_size(), found: y.len() });
    }
    Ok(())
}

/// SVM-based learner over `{μ ≥ 0, Σμ ≤ Λ}` (the trace constraint for
/// trace-one base kernels). Outer projected gradient on
/// `J(μ) = max_α 2αᵀ1 − αᵀYK_μYα` with `∂J/∂μ_k = −αᵀYK_kYα`; the inner
/// SVM is warm-started from the previous `α`.
pub fn l1svm_learn(
    bank: &BaseKernelBank,
    y: &[f64],
    svm: SvmOptions,
    radius: f64,
    outer: OuterOptions,
) -> Result<JointFit<SvmModel>> {
    check_len(bank, y)?;
    check_radius(radius)?;
    let p = bank.len();
    let yv = DVector::from_column_slice(y);
    let inner = SvmOptions { tol: svm.tol.min(outer.tol * 1e-2), ..svm };
    let mut warm: Option<DVector<f64>> = None;

    let eval = |mu: &DVector<f64>| -> Result<(f64, DVector<f64>)> {
        let k = combine(bank, mu)?;
        let model = svm_fit_warm(&k, y, inner, warm.as_ref())?;
        let ya = model.alpha().component_mul(&yv);
        let grad = DVector::from_iterator(
            p,
            bank.kernels().iter().map(|kk| -ya.dot(&(kk.matrix() * &ya))),
        );
        warm = Some(model.alpha().clone());
        Ok((model.dual_objective(), grad))
    };
    let start = DVector::repeat(p, radius / p as f64);
    let out = pgd::projected_gradient("l1svm", start, eval, |x| pgd::project_capped_simplex(x, radius), outer.pg())?;
    let model = svm_fit_warm(&combine(bank, &out.x)?, y, inner, None)?;
    Ok(finish(out, model, NormKind::L1, radius))
}

fn finish<M>(out: PgOutcome, model: M, norm_kind: NormKind, radius: f64) -> JointFit<M> {
    JointFit {
        weights: MixtureWeights { mu: out.x.iter().copied().collect(), norm_kind, radius },
        model,
        objective_trace: out.trace,
        iterations: out.iterations,
        stalled: out.stalled,
    }
}

/// KRR-based learner over `{μ ≥ 0, ‖μ − μ₀‖₂ ≤ Λ}`. Minimizes
/// `J(μ) = yᵀ(K_μ + mλ₀I)⁻¹y` with `∂J/∂μ_k = −αᵀK_kα`.
pub fn l2krr_learn(
    bank: &BaseKernelBank,
    y: &[f64],
    lambda0: f64,
    radius: f64,
    mu0: Option<&[f64]>,
    outer: OuterOptions,
) -> Result<JointFit<KrrModel>> {
    check_len(bank, y)?;
    check_radius(radius)?;
    if !(lambda0 > 0.0) || !lambda0.is_finite() {
        return Err(Error::param(format!("lambda0 must be > 0, got {lambda0}")));
    }
    let p = bank.len();
    let center = match mu0 {
        Some(c) if c.len() != p => return Err(Error::DimensionMismatch { expected: p, found: c.len() }),
        Some(c) => DVector::from_column_slice(c),
        None => DVector::zeros(p),
    };
    let ridge = lambda0 * bank.sample_size() as f64;
    let yv = DVector::from_column_slice(y);

    let eval = |mu: &DVector<f64>| -> Result<(f64, DVector<f64>)> {
        let fit = krr_fit_ridge(&combine(bank, mu)?, &yv, ridge)?;
        let a = fit.alpha();
        let grad = DVector::from_iterator(p, bank.kernels().iter().map(|kk| -a.dot(&(kk.matrix() * a))));
        Ok((yv.dot(a), grad))
    };
    let start = &center + DVector::repeat(p, radius / (p as f64).sqrt());
    let project = |x: &DVector<f64>| pgd::project_ball_nonnegative(x, &center, radius);
    let out = pgd::projected_gradient("l2krr", start, eval, project, outer.pg())?;
    let model = krr_fit_ridge(&combine(bank, &out.x)?, &yv, ridge)?;
    Ok(finish(out, model, NormKind::L2, radius))
}

/// Trade-offs of the single-stage objective
/// `G(μ) = yᵀ(K_μ + I)⁻¹y − γμᵀa + μᵀ(γ″M + γ′I)μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneStageConfig {
    pub gamma: f64,
    pub gamma_prime: f64,
    pub gamma_dprime: f64,
    #[serde(default = "default_outer_iter")]
    pub max_outer_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_outer_iter() -> usize {
    2000
}

fn default_tol() -> f64 {
    1e-8
}

impl OneStageConfig {
    pub fn new(gamma: f64, gamma_prime: f64, gamma_dprime: f64) -> Self {
        OneStageConfig {
            gamma,
            gamma_prime,
            gamma_dprime,
            max_outer_iter: default_outer_iter(),
            tol: default_tol(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma", self.gamma), ("gamma_prime", self.gamma_prime), ("gamma_dprime", self.gamma_dprime)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(format!("{name} must be ≥ 0, got {v}")));
            }
        }
        if self.gamma_prime <= 0.0 && self.gamma_dprime <= 0.0 {
            return Err(Error::param("one of gamma_prime, gamma_dprime must be > 0"));
        }
        if !(self.tol > 0.0) || self.max_outer_iter == 0 {
            return Err(Error::param("tol must be > 0 and max_outer_iter ≥ 1"));
        }
        Ok(())
    }
}

/// `G(μ)` and its gradient, with `α = (K_μ + I)⁻¹y`.
#[derive(Debug, Clone)]
pub struct OneStageObjective<'a> {
    bank: &'a BaseKernelBank,
    y: DVector<f64>,
    a: DVector<f64>,
    penalty: DMatrix<f64>,
    gamma: f64,
}

impl<'a> OneStageObjective<'a> {
    pub fn new(bank: &'a BaseKernelBank, y: &[f64], cfg: &OneStageConfig) -> Result<Self> {
        check_len(bank, y)?;
        let sys = alignment_system(bank, y)?;
        let p = bank.len();
        let penalty = &sys.m * cfg.gamma_dprime + DMatrix::identity(p, p) * cfg.gamma_prime;
        Ok(OneStageObjective { bank, y: DVector::from_column_slice(y), a: sys.a, penalty, gamma: cfg.gamma })
    }

    pub fn value(&self, mu: &[f64]) -> Result<f64> {
        Ok(self.eval(&DVector::from_column_slice(mu))?.0)
    }

    fn eval(&self, mu: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let fit = krr_fit_ridge(&combine(self.bank, mu)?, &self.y, 1.0)?;
        let alpha = fit.alpha();
        let pm = &self.penalty * mu;
        let value = self.y.dot(alpha) - self.gamma * mu.dot(&self.a) + mu.dot(&pm);
        let grad = DVector::from_iterator(
            mu.len(),
            self.bank
                .kernels()
                .iter()
                .enumerate()
                .map(|(k, kk)| -alpha.dot(&(kk.matrix() * alpha)) - self.gamma * self.a[k] + 2.0 * pm[k]),
        );
        Ok((value, grad))
    }
}

/// Minimizes `G` over `μ ≥ 0` from `μ = 0`. The returned KRR model is
/// `α = (K_μ + I)⁻¹y`; the weights carry their own L2 norm as radius.
pub fn onestage_learn(bank: &BaseKernelBank, y: &[f64], cfg: &OneStageConfig) -> Result<JointFit<KrrModel>> {
    cfg.validate()?;
    let objective = OneStageObjective::new(bank, y, cfg)?;
    let opts = PgOptions { tol: cfg.tol, max_iter: cfg.max_outer_iter, ..PgOptions::default() };
    let out = pgd::projected_gradient(
        "onestage",
        DVector::zeros(bank.len()),
        |mu| objective.eval(mu),
        pgd::project_nonnegative,
        opts,
    )?;
    let model = krr_fit_ridge(&combine(bank, &out.x)?, &objective.y, 1.0)?;
    let radius = out.x.norm();
    Ok(JointFit {
        weights: MixtureWeights { mu: out.x.iter().copied().collect(), norm_kind: NormKind::L2, radius },
        model,
        objective_trace: out.trace,
        iterations: out.iterations,
        stalled: out.stalled,
    })
}
