//! Kernel ridge regression in its dual form `α = (K + mλ₀I)⁻¹y`.

use nalgebra::{DMatrix, DVector};

use crate::kernel::GramMatrix;
use crate::linalg;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KrrModel {
    alpha: DVector<f64>,
    effective_lambda: f64,
    fitted: DVector<f64>,
}

impl KrrModel {
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// `λ = m·λ₀`, the ridge actually added to the diagonal.
    pub fn effective_lambda(&self) -> f64 {
        self.effective_lambda
    }

    /// In-sample predictions `Kα`.
    pub fn fitted(&self) -> &DVector<f64> {
        &self.fitted
    }

    pub fn train_size(&self) -> usize {
        self.alpha.len()
    }

    /// `K_cross·α` for a `test × train` kernel block.
    pub fn predict(&self, k_cross: &DMatrix<f64>) -> Result<DVector<f64>> {
        if k_cross.ncols() != self.alpha.len() {
            return Err(Error::DimensionMismatch { expected: self.alpha.len(), found: k_cross.ncols() });
        }
        Ok(k_cross * &self.alpha)
    }
}

/// Solves `(K + ridge·I)α = y` and records `Kα`.
pub(crate) fn krr_fit_ridge(k: &DMatrix<f64>, y: &DVector<f64>, ridge: f64) -> Result<KrrModel> {
    if k.nrows() != y.len() {
        return Err(Error::DimensionMismatch { expected: k.nrows(), found: y.len() });
    }
    let alpha = linalg::spd_solve(k, ridge, y)?;
    let fitted = k * &alpha;
    Ok(KrrModel { alpha, effective_lambda: ridge, fitted })
}

pub fn krr_fit(k: &GramMatrix, y: &[f64], lambda0: f64) -> Result<KrrModel> {
    if !(lambda0 > 0.0) || !lambda0.is_finite() {
        return Err(Error::param(format!("lambda0 must be > 0, got {lambda0}")));
    }
    let m = k.dim();
    krr_fit_ridge(k.matrix(), &DVector::from_column_slice(y), lambda0 * m as f64)
}
