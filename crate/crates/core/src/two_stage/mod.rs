//! First-stage weight learners.
//!
//! * [`align_weights`]: each `μ_k` set independently, proportional to the
//!   centered alignment of `K_k` with the target.
//! * [`lq_weights`]: the `L_q`-constrained generalisation, `μ_k ∝ s_k^{1/(q−1)}`.
//! * [`alignf_weights`]: joint maximization of the centered alignment over
//!   the non-negative orthant, reduced to a non-negative QP.
//! * [`linear_combination_weights`]: the unconstrained closed form `M⁻¹a`.
//!
//! The QP is equivalent to a hard-margin SVM; only the dedicated solver in
//! [`nnqp`] is provided.

pub mod nnqp;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::alignment::{alignment_system, AlignmentSystem};
use crate::kernel::BaseKernelBank;
use crate::linalg;
use crate::{Error, Result};

pub use nnqp::{nnqp_solve, NnqpOptions, NnqpProblem, NnqpSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    L1,
    L2,
}

impl NormKind {
    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            NormKind::L1 => v.iter().map(|x| x.abs()).sum(),
            NormKind::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }
}

/// Non-negative mixture weights `μ` with the norm ball they were scaled to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureWeights {
    pub mu: Vec<f64>,
    pub norm_kind: NormKind,
    pub radius: f64,
}

impl MixtureWeights {
    /// Rescales a non-negative, non-zero direction so that `‖μ‖ = radius`.
    pub fn from_direction(direction: &[f64], norm_kind: NormKind, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::param(format!("radius must be > 0, got {radius}")));
        }
        if direction.iter().any(|&x| x < -1e-12 || !x.is_finite()) {
            return Err(Error::invalid("mixture direction has negative or non-finite entries"));
        }
        let clean: Vec<f64> = direction.iter().map(|&x| x.max(0.0)).collect();
        let n = norm_kind.norm(&clean);
        if !(n > 0.0) {
            return Err(Error::NoSignal);
        }
        Ok(MixtureWeights {
            mu: clean.iter().map(|x| x * radius / n).collect(),
            norm_kind,
            radius,
        })
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn rescaled(&self, norm_kind: NormKind, radius: f64) -> Result<Self> {
        Self::from_direction(&self.mu, norm_kind, radius)
    }
}

fn check_labels(bank: &BaseKernelBank, y: &[f64]) -> Result<()> {
    if y.len() != bank.sample_size() {
        return Err(Error::DimensionMismatch { expected: bank.sample_size(), found: y.len() });
    }
    Ok(())
}

/// Per-kernel scores `⟨K_kc, yyᵀ⟩_F / ‖K_kc‖_F`, proportional to the
/// centered alignments `ρ̂(K_k, yyᵀ)`.
pub fn alignment_scores(bank: &BaseKernelBank, y: &[f64]) -> Result<Vec<f64>> {
    check_labels(bank, y)?;
    let yv = DVector::from_column_slice(y);
    Ok(bank
        .centered()
        .iter()
        .map(|kc| linalg::quad_form(kc.matrix(), &yv) / kc.frobenius_norm())
        .collect())
}

/// `align`: `μ_k ∝ ρ̂(K_k, yyᵀ)`, scaled to `‖μ‖₁ = Λ`.
pub fn align_weights(bank: &BaseKernelBank, y: &[f64], radius: f64) -> Result<MixtureWeights> {
    let scores = alignment_scores(bank, y)?;
    // Frobenius products of PSD matrices are ≥ 0; clip rounding noise
    let scores: Vec<f64> = scores.iter().map(|s| s.max(0.0)).collect();
    if scores.iter().all(|&s| s == 0.0) {
        return Err(Error::NoSignal);
    }
    MixtureWeights::from_direction(&scores, NormKind::L1, radius)
}

/// `μ_k ∝ s_k^{1/(q−1)}` for scores `s_k ≥ 0`, scaled to `‖μ‖₁ = Λ`.
pub fn lq_from_scores(scores: &[f64], q: f64, radius: f64) -> Result<MixtureWeights> {
    if !(q > 1.0) || !q.is_finite() {
        return Err(Error::param(format!(
            "q must be > 1 (use argmax_weights for q = 1), got {q}"
        )));
    }
    let e = 1.0 / (q - 1.0);
    let dir: Vec<f64> = scores.iter().map(|&s| s.max(0.0).powf(e)).collect();
    if dir.iter().all(|&d| d == 0.0) {
        return Err(Error::NoSignal);
    }
    MixtureWeights::from_direction(&dir, NormKind::L1, radius)
}

/// `L_q`-constrained alignment maximization on the Frobenius-normalized
/// centered bank. For `q = 2` this is [`align_weights`].
pub fn lq_weights(bank: &BaseKernelBank, y: &[f64], q: f64, radius: f64) -> Result<MixtureWeights> {
    lq_from_scores(&alignment_scores(bank, y)?, q, radius)
}

/// The `q → 1` limit: all weight on the best-aligned kernel, lowest index
/// on ties.
pub fn argmax_weights(bank: &BaseKernelBank, y: &[f64], radius: f64) -> Result<MixtureWeights> {
    let scores = alignment_scores(bank, y)?;
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = k;
        }
    }
    if !(scores[best] > 0.0) {
        return Err(Error::NoSignal);
    }
    let mut dir = vec![0.0; scores.len()];
    dir[best] = 1.0;
    MixtureWeights::from_direction(&dir, NormKind::L1, radius)
}

/// QP solution `v⋆` and the normalized direction `μ⋆ = v⋆/‖v⋆‖₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignfSolution {
    pub v: DVector<f64>,
    pub direction: DVector<f64>,
    pub qp: NnqpSolution,
}

/// Solves `min_{v≥0} vᵀMv − 2vᵀa` and normalizes.
pub fn alignf_solve(system: &AlignmentSystem, opts: NnqpOptions) -> Result<AlignfSolution> {
    let prob = NnqpProblem::new(system.m.clone(), system.a.clone())?;
    let qp = nnqp_solve(&prob, opts)?;
    let n = qp.v.norm();
    if !(n > 0.0) {
        return Err(Error::NoSignal);
    }
    Ok(AlignfSolution { v: qp.v.clone(), direction: &qp.v / n, qp })
}

/// `alignf`: the alignment-maximizing non-negative combination, scaled
/// to the requested ball.
pub fn alignf_weights(bank: &BaseKernelBank, y: &[f64], norm_kind: NormKind, radius: f64) -> Result<MixtureWeights> {
    check_labels(bank, y)?;
    let system = alignment_system(bank, y)?;
    let sol = alignf_solve(&system, NnqpOptions::default())?;
    MixtureWeights::from_direction(sol.direction.as_slice(), norm_kind, radius)
}

/// Unit-norm maximizer over all (signed) linear combinations.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCombination {
    pub mu: DVector<f64>,
    /// `μ⋆ᵀa`, non-negative whenever `M` is positive definite.
    pub mu_dot_a: f64,
}

pub fn linear_combination_from_system(system: &AlignmentSystem) -> Result<LinearCombination> {
    if !system.is_invertible() {
        return Err(Error::SingularSystem {
            min_eigenvalue: system.min_eigenvalue,
            threshold: system.singular_threshold(),
        });
    }
    let x = linalg::spd_solve(&system.m, 0.0, &system.a)?;
    let n = x.norm();
    if !(n > 0.0) {
        return Err(Error::NoSignal);
    }
    let mu = x / n;
    let mu_dot_a = mu.dot(&system.a);
    Ok(LinearCombination { mu, mu_dot_a })
}

/// `μ⋆ = M⁻¹a / ‖M⁻¹a‖₂`.
pub fn linear_combination_weights(bank: &BaseKernelBank, y: &[f64]) -> Result<LinearCombination> {
    check_labels(bank, y)?;
    linear_combination_from_system(&alignment_system(bank, y)?)
}

/// `ρ̂₀ = ‖v‖_M = √(vᵀMv)` for a QP solution `v`.
pub fn rho0_of_solution(v: &DVector<f64>, m: &nalgebra::DMatrix<f64>) -> Result<f64> {
    if v.len() != m.nrows() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: v.len() });
    }
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::invalid("rho0 is undefined for v = 0"));
    }
    if v.iter().any(|&x| x < 0.0) {
        return Err(Error::invalid("rho0 expects a non-negative QP solution"));
    }
    Ok(linalg::quad_form(m, v).max(0.0).sqrt())
}

/// `ρ̂₀(μ) = μᵀa / √(μᵀMμ)` evaluated directly.
pub fn rho0_direct(mu: &DVector<f64>, system: &AlignmentSystem) -> f64 {
    mu.dot(&system.a) / linalg::quad_form(&system.m, mu).sqrt()
}
