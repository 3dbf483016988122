//! Sample versions of the predictors built directly from a well-aligned
//! kernel, and of their error bounds.
//!
//! With `Ê` the empirical expectation,
//! `h_S(x) = Ê_i[y_i K_c(x, x_i)] / (√Ê[K_c²] √Ê[(y_i y_j)²])` and
//! `Ê[y h_S] = s·ρ̂(K, K_Y)` with `s = ‖K_Yc‖_F / ‖K_Y‖_F`. The factor `s` is
//! one exactly when the labels have zero sample mean; for other labels
//! the bounds below are stated with `sρ̂` in place of `ρ̂`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::alignment::{centered_alignment, target_kernel, unnormalized_alignment};
use crate::kernel::{center, GramMatrix};
use crate::{Error, Result, Task};

/// Tolerance of the asserted identity `Ê[y h_S] = sρ̂`.
const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorDiagnostics {
    pub task: Task,
    pub rho_hat: f64,
    /// `s = ‖K_Yc‖_F / ‖K_Y‖_F`
    pub label_factor: f64,
    /// `Ê[y h_S]`
    pub mean_margin: f64,
    pub identity_residual: f64,
    /// `Γ̂ = max_j √(Ê_i[K_c(x_j, x_i)²] / Ê[K_c²])`
    pub gamma_hat: f64,
    /// Misclassification rate `P̂[y h_S < 0]`, or mean squared error.
    pub empirical_error: f64,
    /// `1 − sρ̂/Γ̂` (classification) or `2(1 − sρ̂)` (regression).
    pub bound_value: f64,
}

impl PredictorDiagnostics {
    pub fn bound_holds(&self, slack: f64) -> bool {
        self.empirical_error <= self.bound_value + slack
    }
}

/// Evaluates `h_S` on the sample itself and checks the identity
/// `Ê[y h_S] = sρ̂`; a violation is reported as a numeric error.
///
/// Regression labels must have `Ê[y²] = 1`.
pub fn predictor_diagnostics(k: &GramMatrix, y: &[f64], task: Task) -> Result<PredictorDiagnostics> {
    let m = k.dim();
    if y.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: y.len() });
    }
    let mf = m as f64;
    let yv = DVector::from_column_slice(y);
    let y2 = yv.norm_squared() / mf;
    match task {
        Task::Classification if y.iter().any(|&v| v != 1.0 && v != -1.0) => {
            return Err(Error::invalid("classification labels must be ±1"));
        }
        Task::Regression if (y2 - 1.0).abs() > 1e-8 => {
            return Err(Error::invalid(format!("regression labels must satisfy Ê[y²] = 1, got {y2}")));
        }
        _ => {}
    }

    let kc = center(k);
    let kc_norm = kc.frobenius_norm();
    if kc_norm == 0.0 {
        return Err(Error::degenerate("centered kernel matrix has zero Frobenius norm"));
    }
    let rho_hat = centered_alignment(k, &target_kernel(y))?;
    let yc = yv.add_scalar(-yv.mean());
    let label_factor = yc.norm_squared() / yv.norm_squared();

    // √(Ê K_c²) = ‖K_c‖/m and √(Ê (y_i y_j)²) = ‖y‖²/m
    let denom = (kc_norm / mf) * (yv.norm_squared() / mf);
    let h = (kc.matrix() * &yv) / (mf * denom);
    let mean_margin = yv.dot(&h) / mf;
    let identity_residual = (mean_margin - label_factor * rho_hat).abs();
    if identity_residual > IDENTITY_TOL {
        return Err(Error::Numeric(format!(
            "empirical margin {mean_margin} differs from s·ρ̂ = {} by {identity_residual:e}",
            label_factor * rho_hat
        )));
    }

    let mean_sq = kc_norm * kc_norm / (mf * mf);
    let gamma_hat = (0..m)
        .map(|j| (kc.matrix().row(j).norm_squared() / mf / mean_sq).sqrt())
        .fold(0.0, f64::max);

    let (empirical_error, bound_value) = match task {
        Task::Classification => {
            let wrong = y.iter().zip(h.iter()).filter(|(yi, hi)| *yi * *hi < 0.0).count();
            (wrong as f64 / mf, 1.0 - label_factor * rho_hat / gamma_hat)
        }
        Task::Regression => {
            let mse = y.iter().zip(h.iter()).map(|(yi, hi)| (yi - hi).powi(2)).sum::<f64>() / mf;
            (mse, 2.0 * (1.0 - label_factor * rho_hat))
        }
    };
    Ok(PredictorDiagnostics {
        task,
        rho_hat,
        label_factor,
        mean_margin,
        identity_residual,
        gamma_hat,
        empirical_error,
        bound_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GStarDiagnostics {
    /// `ρ̂_u(K, K_Y)`
    pub rho_u_hat: f64,
    /// `R̂² = max_i K_c(x_i, x_i)`
    pub r2_hat: f64,
    pub empirical_error: f64,
    /// `1 − ρ̂_u/R̂²`
    pub bound_value: f64,
}

impl GStarDiagnostics {
    pub fn bound_holds(&self, slack: f64) -> bool {
        self.empirical_error <= self.bound_value + slack
    }
}

/// `g_S(x) = Ê_i[y_i K_c(x, x_i)]` on the sample, for ±1 labels.
pub fn g_star_diagnostics(k: &GramMatrix, y: &[f64]) -> Result<GStarDiagnostics> {
    let m = k.dim();
    if y.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: y.len() });
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::invalid("labels must be ±1"));
    }
    let kc = center(k);
    let r2_hat = kc.matrix().diagonal().max();
    if !(r2_hat > 0.0) {
        return Err(Error::degenerate("centered kernel has a zero diagonal"));
    }
    let yv = DVector::from_column_slice(y);
    let g = kc.matrix() * &yv / m as f64;
    let wrong = y.iter().zip(g.iter()).filter(|(yi, gi)| *yi * *gi < 0.0).count();
    let rho_u_hat = unnormalized_alignment(k, &target_kernel(y))?;
    Ok(GStarDiagnostics {
        rho_u_hat,
        r2_hat,
        empirical_error: wrong as f64 / m as f64,
        bound_value: 1.0 - rho_u_hat / r2_hat,
    })
}
