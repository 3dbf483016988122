//! `min_{v ≥ 0} vᵀMv − 2vᵀa` for symmetric PSD `M`.
//!
//! Cyclic coordinate descent with the exact coordinate minimizer
//! `v_k ← max(0, (a_k − Σ_{l≠k} M_kl v_l) / M_kk)`. Every few sweeps a
//! Newton step restricted to the current support is tried and kept only
//! if it lowers the objective, which removes the slow tail of plain
//! coordinate descent on ill-conditioned `M`. Singular `M` is allowed.

use nalgebra::{DMatrix, DVector};

use crate::linalg;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NnqpProblem {
    m: DMatrix<f64>,
    a: DVector<f64>,
}

impl NnqpProblem {
    pub fn new(m: DMatrix<f64>, a: DVector<f64>) -> Result<Self> {
        let p = a.len();
        if m.nrows() != p || m.ncols() != p {
            return Err(Error::DimensionMismatch { expected: p, found: m.nrows() });
        }
        if m.iter().chain(a.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("QP data has non-finite entries"));
        }
        if linalg::asymmetry(&m) > 1e-10 {
            return Err(Error::invalid("QP matrix is not symmetric"));
        }
        for k in 0..p {
            if m[(k, k)] < 0.0 {
                return Err(Error::invalid(format!("QP matrix has negative diagonal at {k}")));
            }
            if m[(k, k)] == 0.0 && a[k] > 0.0 {
                return Err(Error::invalid(format!(
                    "objective unbounded below along coordinate {k} (M_kk = 0, a_k > 0)"
                )));
            }
        }
        Ok(NnqpProblem { m, a })
    }

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn a(&self) -> &DVector<f64> {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// `F(v) = vᵀMv − 2vᵀa`.
    pub fn objective(&self, v: &DVector<f64>) -> f64 {
        linalg::quad_form(&self.m, v) - 2.0 * v.dot(&self.a)
    }

    /// `∇F(v) = 2(Mv − a)`.
    pub fn gradient(&self, v: &DVector<f64>) -> DVector<f64> {
        (&self.m * v - &self.a) * 2.0
    }

    /// Natural KKT residual `max_k |min(v_k, ∇_k F(v))|`.
    pub fn kkt_residual(&self, v: &DVector<f64>) -> f64 {
        let g = self.gradient(v);
        v.iter()
            .zip(g.iter())
            .map(|(&vk, &gk)| vk.min(gk).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnqpOptions {
    pub tol: f64,
    /// Sweep budget; `None` means `100·p²`.
    pub max_sweeps: Option<usize>,
}

impl Default for NnqpOptions {
    fn default() -> Self {
        NnqpOptions { tol: 1e-10, max_sweeps: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnqpSolution {
    pub v: DVector<f64>,
    pub objective: f64,
    pub residual: f64,
    pub sweeps: usize,
    /// Objective after each sweep, starting with `F(0) = 0`.
    pub objective_trace: Vec<f64>,
}

const FACE_STEP_EVERY: usize = 5;

pub fn nnqp_solve(prob: &NnqpProblem, opts: NnqpOptions) -> Result<NnqpSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::param(format!("tolerance must be > 0, got {}", opts.tol)));
    }
    let p = prob.dim();
    let max_sweeps = opts.max_sweeps.unwrap_or(100 * p * p).max(1);
    let (m, a) = (&prob.m, &prob.a);

    let mut v: DVector<f64> = DVector::zeros(p);
    let mut mv: DVector<f64> = DVector::zeros(p);
    let mut obj = 0.0;
    let mut trace = vec![obj];
    let mut residual = prob.kkt_residual(&v);
    if residual <= opts.tol {
        return Ok(NnqpSolution { v, objective: obj, residual, sweeps: 0, objective_trace: trace });
    }

    for sweep in 1..=max_sweeps {
        for k in 0..p {
            let mkk = m[(k, k)];
            let new = if mkk > 0.0 {
                ((a[k] - (mv[k] - mkk * v[k])) / mkk).max(0.0)
            } else {
                0.0
            };
            let delta = new - v[k];
            if delta != 0.0 {
                v[k] = new;
                mv.axpy(delta, &m.column(k), 1.0);
            }
        }
        // refresh to keep Mv from drifting
        mv = m * &v;
        let mut cur = v.dot(&mv) - 2.0 * v.dot(a);

        if sweep % FACE_STEP_EVERY == 0 {
            if let Some((nv, nobj)) = face_newton_step(prob, &v, cur) {
                v = nv;
                mv = m * &v;
                cur = nobj;
            }
        }
        obj = cur;
        trace.push(obj);
        residual = prob.kkt_residual(&v);
        if residual <= opts.tol {
            return Ok(NnqpSolution { v, objective: obj, residual, sweeps: sweep, objective_trace: trace });
        }
    }
    Err(Error::NonConverged {
        solver: "nnqp",
        iterations: max_sweeps,
        residual,
        best: v.iter().copied().collect(),
    })
}

/// Newton step on the face `{v_k = 0 for k ∉ S}` with `S = supp(v)`,
/// truncated to stay feasible. Returns the new point if it improves `F`.
fn face_newton_step(prob: &NnqpProblem, v: &DVector<f64>, obj: f64) -> Option<(DVector<f64>, f64)> {
    let support: Vec<usize> = (0..v.len()).filter(|&k| v[k] > 0.0).collect();
    if support.is_empty() {
        return None;
    }
    let s = support.len();
    let mss = DMatrix::from_fn(s, s, |i, j| prob.m[(support[i], support[j])]);
    let as_ = DVector::from_iterator(s, support.iter().map(|&k| prob.a[k]));
    let w = mss.svd(true, true).solve(&as_, 1e-14 * prob.m.amax().max(f64::MIN_POSITIVE)).ok()?;

    // largest t ≤ 1 keeping v_S + t(w − v_S) ≥ 0
    let mut t = 1.0f64;
    for (i, &k) in support.iter().enumerate() {
        let d = w[i] - v[k];
        if d < 0.0 {
            t = t.min(v[k] / -d);
        }
    }
    let mut cand = v.clone();
    for (i, &k) in support.iter().enumerate() {
        cand[k] = (v[k] + t * (w[i] - v[k])).max(0.0);
    }
    let cobj = prob.objective(&cand);
    (cobj.is_finite() && cobj <= obj).then_some((cand, cobj))
}
