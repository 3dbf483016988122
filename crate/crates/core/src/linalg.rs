//! Small dense helpers shared by the learners.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// `Tr[AᵀB]` accumulated in storage order.
pub(crate) fn frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x * y)
        .sum()
}

pub(crate) fn symmetric_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    SymmetricEigen::new(m.clone()).eigenvalues
}

pub(crate) fn min_max_eigenvalue(m: &DMatrix<f64>) -> (f64, f64) {
    if m.nrows() == 0 {
        return (0.0, 0.0);
    }
    let ev = symmetric_eigenvalues(m);
    (ev.min(), ev.max())
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub(crate) fn spectral_norm_sym(m: &DMatrix<f64>) -> f64 {
    let (lo, hi) = min_max_eigenvalue(m);
    lo.abs().max(hi.abs())
}

/// Solves `(A + shift·I) x = b` for symmetric positive (semi-)definite `A`.
///
/// Cholesky first; on failure a single jitter of `1e-12·Tr/m` is added.
pub(crate) fn spd_solve(a: &DMatrix<f64>, shift: f64, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.nrows();
    let mut sys = a.clone();
    for i in 0..n {
        sys[(i, i)] += shift;
    }
    if let Some(ch) = sys.clone().cholesky() {
        return finite(ch.solve(b));
    }
    let jitter = 1e-12 * sys.trace().abs().max(f64::MIN_POSITIVE) / n.max(1) as f64;
    for i in 0..n {
        sys[(i, i)] += jitter;
    }
    match sys.cholesky() {
        Some(ch) => finite(ch.solve(b)),
        None => Err(Error::Numeric(
            "linear system is not positive definite even after jitter".into(),
        )),
    }
}

fn finite(x: DVector<f64>) -> Result<DVector<f64>> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::Numeric("non-finite solution of linear system".into()))
    }
}

/// Max relative asymmetry `|A_ij − A_ji| / max|A|`.
pub(crate) fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..j {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

pub(crate) fn quad_form(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(m * v))
}
