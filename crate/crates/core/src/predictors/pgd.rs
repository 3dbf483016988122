//! Projected gradient descent with Armijo backtracking, and the
//! projections used by the kernel learners.

use nalgebra::DVector;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PgOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub initial_step: f64,
}

impl Default for PgOptions {
    fn default() -> Self {
        PgOptions { tol: 1e-8, max_iter: 1000, armijo: 1e-4, initial_step: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PgOutcome {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Objective at the start point and after every accepted step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub pg_norm: f64,
    /// The line search could not decrease the objective any further.
    pub stalled: bool,
}

const MIN_STEP: f64 = 1e-20;
const MAX_STEP: f64 = 1e12;

/// Minimizes `f` over the set described by `project`. `eval` returns
/// `(f(x), ∇f(x))`. Stops once `‖x − P(x − ∇f(x))‖ ≤ tol`.
///
/// Each line search starts from twice the previously accepted step
/// (the first from `initial_step`) and halves until the Armijo condition
/// `f(x⁺) ≤ f(x) + σ∇f(x)ᵀ(x⁺ − x)` holds.
pub(crate) fn projected_gradient<E, P>(
    solver: &'static str,
    x0: DVector<f64>,
    mut eval: E,
    project: P,
    opts: PgOptions,
) -> Result<PgOutcome>
where
    E: FnMut(&DVector<f64>) -> Result<(f64, DVector<f64>)>,
    P: Fn(&DVector<f64>) -> DVector<f64>,
{
    if !(opts.tol > 0.0) {
        return Err(Error::param(format!("tolerance must be > 0, got {}", opts.tol)));
    }
    let mut x = project(&x0);
    let (mut f, mut g) = eval(&x)?;
    let mut trace = vec![f];
    let mut step = opts.initial_step;
    let mut pg_norm = f64::INFINITY;

    for it in 0..opts.max_iter {
        pg_norm = (&x - project(&(&x - &g))).norm();
        if pg_norm <= opts.tol {
            return Ok(PgOutcome { x, objective: f, trace, iterations: it, pg_norm, stalled: false });
        }
        let mut t = step;
        loop {
            let cand = project(&(&x - &g * t));
            let d = &cand - &x;
            if d.norm() == 0.0 || t < MIN_STEP {
                log::debug!("{solver}: line search stalled at projected-gradient norm {pg_norm:e}");
                return Ok(PgOutcome { x, objective: f, trace, iterations: it, pg_norm, stalled: true });
            }
            let (fc, gc) = eval(&cand)?;
            if fc.is_finite() && fc <= f + opts.armijo * g.dot(&d) {
                x = cand;
                f = fc;
                g = gc;
                trace.push(f);
                break;
            }
            t *= 0.5;
        }
        step = (2.0 * t).min(MAX_STEP);
    }
    Err(Error::NonConverged {
        solver,
        iterations: opts.max_iter,
        residual: pg_norm,
        best: x.iter().copied().collect(),
    })
}

pub(crate) fn project_nonnegative(x: &DVector<f64>) -> DVector<f64> {
    x.map(|v| v.max(0.0))
}

/// Euclidean projection onto `{μ ≥ 0, Σμ ≤ radius}`.
pub(crate) fn project_capped_simplex(x: &DVector<f64>, radius: f64) -> DVector<f64> {
    let clamped = project_nonnegative(x);
    if clamped.sum() <= radius {
        return clamped;
    }
    // projection onto {μ ≥ 0, Σμ = radius}: find the threshold τ with
    // Σ max(x_k − τ, 0) = radius
    let mut sorted: Vec<f64> = x.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let t = (cumsum - radius) / (j + 1) as f64;
        if s - t > 0.0 {
            tau = t;
        }
    }
    x.map(|v| (v - tau).max(0.0))
}

/// Clamp to `μ ≥ 0`, then pull back into `‖μ − center‖₂ ≤ radius` along
/// the ray from `center`. Exact when `center = 0`.
pub(crate) fn project_ball_nonnegative(x: &DVector<f64>, center: &DVector<f64>, radius: f64) -> DVector<f64> {
    let clamped = project_nonnegative(x);
    let d = &clamped - center;
    let n = d.norm();
    if n <= radius {
        return clamped;
    }
    project_nonnegative(&(center + d * (radius / n)))
}
