//! Bias-free soft-margin SVM, solved in the dual
//! `max_{0≤α≤C} 2αᵀ1 − αᵀYKYα` by cyclic coordinate ascent.
//!
//! Without the equality constraint `αᵀy = 0` every coordinate has a
//! closed-form box-clipped maximizer. A bias can be emulated by fitting on
//! `K + 1` (`add_bias`).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::kernel::GramMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmOptions {
    pub c: f64,
    /// Largest allowed violation of the box-projected optimality conditions.
    pub tol: f64,
    pub max_sweeps: usize,
    pub add_bias: bool,
}

impl Default for SvmOptions {
    fn default() -> Self {
        SvmOptions { c: 1.0, tol: 1e-8, max_sweeps: 20_000, add_bias: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    alpha: DVector<f64>,
    labels: DVector<f64>,
    support: Vec<usize>,
    c: f64,
    add_bias: bool,
    dual_objective: f64,
    duality_gap: f64,
    sweeps: usize,
}

impl SvmModel {
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.labels
    }

    /// Indices with `α_i > 0`.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn dual_objective(&self) -> f64 {
        self.dual_objective
    }

    pub fn duality_gap(&self) -> f64 {
        self.duality_gap
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn train_size(&self) -> usize {
        self.alpha.len()
    }

    /// Decision values `f(x) = Σ α_i y_i K(x_i, x)` for a `test × train` block.
    pub fn decision(&self, k_cross: &DMatrix<f64>) -> Result<DVector<f64>> {
        if k_cross.ncols() != self.alpha.len() {
            return Err(Error::DimensionMismatch { expected: self.alpha.len(), found: k_cross.ncols() });
        }
        let coef = self.alpha.component_mul(&self.labels);
        let mut f = k_cross * &coef;
        if self.add_bias {
            f.add_scalar_mut(coef.sum());
        }
        Ok(f)
    }
}

/// `P − D = 2αᵀQα + 2CΣ max(0, 1 − (Qα)_i) − 2Σα`, given `Qα`.
fn duality_gap(alpha: &DVector<f64>, q_alpha: &DVector<f64>, c: f64) -> f64 {
    let quad = alpha.dot(q_alpha);
    let hinge: f64 = q_alpha.iter().map(|&v| (1.0 - v).max(0.0)).sum();
    2.0 * quad + 2.0 * c * hinge - 2.0 * alpha.sum()
}

fn violation(alpha: f64, grad: f64, c: f64) -> f64 {
    if alpha <= 0.0 {
        grad.max(0.0)
    } else if alpha >= c {
        (-grad).max(0.0)
    } else {
        grad.abs()
    }
}

pub fn svm_fit(k: &GramMatrix, y: &[f64], opts: SvmOptions) -> Result<SvmModel> {
    svm_fit_warm(k.matrix(), y, opts, None)
}

/// Coordinate ascent from `warm` (clipped to the box) or from zero.
pub(crate) fn svm_fit_warm(
    k: &DMatrix<f64>,
    y: &[f64],
    opts: SvmOptions,
    warm: Option<&DVector<f64>>,
) -> Result<SvmModel> {
    let m = k.nrows();
    if y.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: y.len() });
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::invalid("SVM labels must be ±1"));
    }
    if !(opts.c >= 0.0) || !opts.c.is_finite() {
        return Err(Error::param(format!("C must be ≥ 0, got {}", opts.c)));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::param(format!("tolerance must be > 0, got {}", opts.tol)));
    }
    let labels = DVector::from_column_slice(y);
    let shift = if opts.add_bias { 1.0 } else { 0.0 };
    let q = DMatrix::from_fn(m, m, |i, j| y[i] * y[j] * (k[(i, j)] + shift));
    let c = opts.c;

    let mut alpha = match warm {
        Some(w) if w.len() == m => w.map(|v| v.clamp(0.0, c)),
        _ => DVector::zeros(m),
    };
    let mut q_alpha = &q * &alpha;

    let finish = |alpha: DVector<f64>, q_alpha: &DVector<f64>, sweeps: usize| {
        let dual_objective = 2.0 * alpha.sum() - alpha.dot(q_alpha);
        let duality_gap = duality_gap(&alpha, q_alpha, c);
        let support = (0..alpha.len()).filter(|&i| alpha[i] > 0.0).collect();
        SvmModel {
            alpha,
            labels: labels.clone(),
            support,
            c,
            add_bias: opts.add_bias,
            dual_objective,
            duality_gap,
            sweeps,
        }
    };

    if c == 0.0 {
        return Ok(finish(alpha, &q_alpha, 0));
    }

    let mut worst = f64::INFINITY;
    for sweep in 1..=opts.max_sweeps {
        worst = 0.0f64;
        for i in 0..m {
            let grad = 1.0 - q_alpha[i];
            worst = worst.max(violation(alpha[i], grad, c));
            let qii = q[(i, i)];
            let new = if qii > 0.0 {
                (alpha[i] + grad / qii).clamp(0.0, c)
            } else if grad > 0.0 {
                c
            } else {
                0.0
            };
            let delta = new - alpha[i];
            if delta != 0.0 {
                alpha[i] = new;
                q_alpha.axpy(delta, &q.column(i), 1.0);
            }
        }
        if worst <= opts.tol {
            q_alpha = &q * &alpha;
            return Ok(finish(alpha, &q_alpha, sweep));
        }
    }
    let gap = duality_gap(&alpha, &q_alpha, c);
    log::debug!("svm stopped with violation {worst:e}, duality gap {gap:e}");
    Err(Error::NonConverged {
        solver: "svm",
        iterations: opts.max_sweeps,
        residual: gap,
        best: alpha.iter().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{gram, KernelSpec, Sample};
    use approx::assert_abs_diff_eq;

    fn dual(q: &DMatrix<f64>, a: &[f64]) -> f64 {
        let v = DVector::from_column_slice(a);
        2.0 * v.sum() - v.dot(&(q * &v))
    }

    #[test]
    fn two_separable_points() {
        let s = Sample::from_rows(&[vec![-1.0], vec![1.0]], &[-1.0, 1.0]).unwrap();
        let k = gram(&KernelSpec::Linear { offset: 1.0 }, &s).unwrap();
        let model = svm_fit(&k, &[-1.0, 1.0], SvmOptions { c: 100.0, ..Default::default() }).unwrap();
        let f = model.decision(k.matrix()).unwrap();
        assert!(f[0] < 0.0 && f[1] > 0.0);
        assert_abs_diff_eq!(model.alpha()[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(model.duality_gap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn zero_box() {
        let k = GramMatrix::new(DMatrix::identity(3, 3)).unwrap();
        let model = svm_fit(&k, &[1.0, -1.0, 1.0], SvmOptions { c: 0.0, ..Default::default() }).unwrap();
        assert!(model.alpha().iter().all(|&a| a == 0.0));
        assert!(model.decision(k.matrix()).unwrap().iter().all(|&f| f == 0.0));
        assert!(model.support().is_empty());
    }

    #[test]
    fn four_points_match_box_grid() {
        let s = Sample::from_rows(
            &[vec![0.0, 0.2], vec![0.4, 1.0], vec![1.0, 0.0], vec![1.2, 0.9]],
            &[-1.0, -1.0, 1.0, 1.0],
        )
        .unwrap();
        let y = [-1.0, -1.0, 1.0, 1.0];
        let k = gram(&KernelSpec::Gaussian { gamma: 0.7 }, &s).unwrap();
        let c = 0.5;
        let model = svm_fit(&k, &y, SvmOptions { c, tol: 1e-12, ..Default::default() }).unwrap();
        let q = DMatrix::from_fn(4, 4, |i, j| y[i] * y[j] * k.matrix()[(i, j)]);

        let n = 50;
        let step = c / n as f64;
        let mut best = f64::NEG_INFINITY;
        for a in 0..=n {
            for b in 0..=n {
                for cc in 0..=n {
                    for d in 0..=n {
                        let pt = [a as f64 * step, b as f64 * step, cc as f64 * step, d as f64 * step];
                        best = best.max(dual(&q, &pt));
                    }
                }
            }
        }
        assert!(model.dual_objective() >= best - 1e-12);
        assert!(model.dual_objective() - best <= 1e-2);
        assert!(model.alpha().iter().all(|&a| (0.0..=c).contains(&a)));
    }

    #[test]
    fn scaling_kernel_preserves_signs() {
        let s = Sample::from_rows(
            &[vec![0.0], vec![0.3], vec![0.9], vec![1.4], vec![2.0], vec![0.6]],
            &[-1.0, -1.0, 1.0, 1.0, 1.0, -1.0],
        )
        .unwrap();
        let y = s.labels().as_slice().to_vec();
        let k = gram(&KernelSpec::Gaussian { gamma: 2.0 }, &s).unwrap();
        let scale = 3.0;
        let base = svm_fit(&k, &y, SvmOptions { c: 1.0, tol: 1e-12, ..Default::default() }).unwrap();
        let scaled = svm_fit(&k.scaled(scale), &y, SvmOptions { c: 1.0 / scale, tol: 1e-12, ..Default::default() }).unwrap();
        let f0 = base.decision(k.matrix()).unwrap();
        let f1 = scaled.decision(&(k.matrix() * scale)).unwrap();
        for (a, b) in f0.iter().zip(f1.iter()) {
            assert_eq!(a.signum(), b.signum());
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn bias_option_shifts_decisions() {
        let s = Sample::from_rows(&[vec![2.0], vec![3.0], vec![4.0]], &[-1.0, 1.0, 1.0]).unwrap();
        let y = [-1.0, 1.0, 1.0];
        let k = gram(&KernelSpec::Linear { offset: 0.0 }, &s).unwrap();
        let model = svm_fit(&k, &y, SvmOptions { c: 10.0, add_bias: true, ..Default::default() }).unwrap();
        let coef = model.alpha().component_mul(model.labels());
        let f = model.decision(k.matrix()).unwrap();
        let manual = k.matrix() * &coef + DVector::repeat(3, coef.sum());
        assert_abs_diff_eq!(f, manual, epsilon = 1e-14);
    }

    #[test]
    fn errors() {
        let k = GramMatrix::new(DMatrix::identity(2, 2)).unwrap();
        assert!(svm_fit(&k, &[1.0, 0.5], SvmOptions::default()).is_err());
        let hard = GramMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.999999, 0.999999, 1.0])).unwrap();
        let r = svm_fit(&hard, &[1.0, -1.0], SvmOptions { c: 1e9, tol: 1e-14, max_sweeps: 2, add_bias: false });
        assert!(matches!(r, Err(Error::NonConverged { solver: "svm", .. })));
    }
}
