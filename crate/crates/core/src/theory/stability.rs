//! Stability of the alignment-maximizing weights under one-point changes
//! of the sample, and the resulting generalization bound for two-stage
//! KRR.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::alignment::alignment_system;
use crate::kernel::{gram, BaseKernelBank, GramMatrix, KernelSpec, Sample};
use crate::linalg;
use crate::two_stage::{nnqp_solve, NnqpOptions, NnqpProblem};
use crate::{Error, Result};

/// Residual of `μ′ − μ = Δv/‖v′‖ − (Δv)ᵀ(v + v′) v / (‖v‖‖v′‖(‖v‖ + ‖v′‖))`
/// with `μ = v/‖v‖`, `μ′ = v′/‖v′‖`.
pub fn delta_mu_identity(v: &[f64], v_prime: &[f64]) -> Result<f64> {
    if v.len() != v_prime.len() {
        return Err(Error::DimensionMismatch { expected: v.len(), found: v_prime.len() });
    }
    let v = DVector::from_column_slice(v);
    let vp = DVector::from_column_slice(v_prime);
    let (n, np) = (v.norm(), vp.norm());
    if n == 0.0 || np == 0.0 {
        return Err(Error::invalid("identity is undefined for a zero vector"));
    }
    let dv = &vp - &v;
    let lhs = &vp / np - &v / n;
    let rhs = &dv / np - &v * (dv.dot(&(&v + &vp)) / (n * np * (n + np)));
    Ok((lhs - rhs).norm())
}

/// QP solutions on `S` and on `S′` (one point replaced) with the
/// quantities entering `‖Δv‖²_M ≤ [Δa − (ΔM)v′]ᵀΔv`.
///
/// `a` and `M` are taken in empirical-expectation units (divided by `m²`);
/// the solutions `v` are unaffected and both sides scale alike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityProbe {
    pub index: usize,
    pub v: Vec<f64>,
    pub v_prime: Vec<f64>,
    pub delta_v: Vec<f64>,
    /// `None` when either solution is zero.
    pub delta_mu: Option<Vec<f64>>,
    pub a: Vec<f64>,
    pub a_prime: Vec<f64>,
    pub m: Vec<Vec<f64>>,
    pub m_prime: Vec<Vec<f64>>,
    /// `‖Δv‖²_M`
    pub lhs: f64,
    /// `[Δa − (ΔM)v′]ᵀΔv`
    pub rhs: f64,
    pub slack: f64,
    pub tol: f64,
}

impl StabilityProbe {
    /// `slack ≥ −10·tol`.
    pub fn holds(&self) -> bool {
        self.slack >= -10.0 * self.tol
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn scaled_system(specs: &[KernelSpec], s: &Sample) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let kernels = specs.iter().map(|k| gram(k, s)).collect::<Result<Vec<GramMatrix>>>()?;
    let bank = BaseKernelBank::new(kernels)?;
    let sys = alignment_system(&bank, s.labels().as_slice())?;
    let m2 = (s.len() * s.len()) as f64;
    Ok((sys.a / m2, sys.m / m2))
}

/// Replaces point `index` of `sample` by `(point, label)`, solves the
/// alignment QP on both samples and evaluates both sides of the
/// stability inequality.
pub fn qp_stability_check(
    specs: &[KernelSpec],
    sample: &Sample,
    index: usize,
    point: &[f64],
    label: f64,
    opts: NnqpOptions,
) -> Result<StabilityProbe> {
    if index >= sample.len() {
        return Err(Error::param(format!("index {index} out of range for sample of size {}", sample.len())));
    }
    if point.len() != sample.dim() {
        return Err(Error::DimensionMismatch { expected: sample.dim(), found: point.len() });
    }
    let mut pts = sample.points().clone();
    let mut labels = sample.labels().clone();
    for (j, &x) in point.iter().enumerate() {
        pts[(index, j)] = x;
    }
    labels[index] = label;
    let perturbed = Sample::new(pts, labels)?;

    let (a, m) = scaled_system(specs, sample)?;
    let (ap, mp) = scaled_system(specs, &perturbed)?;
    let v = nnqp_solve(&NnqpProblem::new(m.clone(), a.clone())?, opts)?.v;
    let vp = nnqp_solve(&NnqpProblem::new(mp.clone(), ap.clone())?, opts)?.v;

    let dv = &vp - &v;
    let lhs = linalg::quad_form(&m, &dv);
    let rhs = (&ap - &a - (&mp - &m) * &vp).dot(&dv);
    let delta_mu = (v.norm() > 0.0 && vp.norm() > 0.0).then(|| (&vp / vp.norm() - &v / v.norm()).iter().copied().collect());
    Ok(StabilityProbe {
        index,
        v: v.iter().copied().collect(),
        v_prime: vp.iter().copied().collect(),
        delta_v: dv.iter().copied().collect(),
        delta_mu,
        a: a.iter().copied().collect(),
        a_prime: ap.iter().copied().collect(),
        m: rows(&m),
        m_prime: rows(&mp),
        lhs,
        rhs,
        slack: rhs - lhs,
        tol: opts.tol,
    })
}

/// `‖K‖_{2,t} = (Σ_k ‖K_k‖₂^t)^{1/t}` with the spectral norm; `t = ∞`
/// gives the maximum.
pub fn group_norm(kernels: &[GramMatrix], t: f64) -> Result<f64> {
    if !(t >= 1.0) {
        return Err(Error::param(format!("t must be ≥ 1, got {t}")));
    }
    let norms = kernels.iter().map(|k| linalg::spectral_norm_sym(k.matrix()));
    if t.is_infinite() {
        Ok(norms.fold(0.0, f64::max))
    } else {
        Ok(norms.map(|n| n.powf(t)).sum::<f64>().powf(1.0 / t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenBoundInputs {
    /// `Λ₁`, the L1 radius of the weights.
    pub lambda1: f64,
    pub lambda0: f64,
    /// `R² = sup_{k,x} K_k(x, x)`
    pub r2: f64,
    /// Bound `M` on `|y|`.
    pub m_label: f64,
    /// `‖Δμ‖_s`
    pub delta_mu_norm: f64,
    /// `‖K_c‖_{2,t}`
    pub k_group_norm: f64,
    /// Empirical risk `R̂(h_S)`.
    #[serde(default)]
    pub empirical_risk: f64,
}

impl GenBoundInputs {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda0", self.lambda0), ("r2", self.r2), ("m_label", self.m_label)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("delta_mu_norm", self.delta_mu_norm),
            ("k_group_norm", self.k_group_norm),
            ("empirical_risk", self.empirical_risk),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(format!("{name} must be ≥ 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenBound {
    pub m1: f64,
    pub m2: f64,
    /// `M₂` with `‖Δμ‖_s‖K_c‖_{2,t}` replaced by `2Λ₁`.
    pub m2_simplified: f64,
    pub sqrt_term: f64,
    pub value: f64,
    pub value_simplified: f64,
}

/// `R̂ + 2M₁M₂/m + (1 + 16M₂/M₁)(M₁M₂/4)√(log(1/δ)/2m)` with
/// `M₁ = 2[1 + √(Λ₁R²/λ₀)]M` and
/// `M₂ = (2Λ₁R²/λ₀)[1 + ‖Δμ‖_s‖K_c‖_{2,t}/(2λ₀)]M`.
pub fn generalization_bound_value(inputs: &GenBoundInputs, m: usize, delta: f64) -> Result<GenBound> {
    inputs.validate()?;
    if m == 0 {
        return Err(Error::param("m must be ≥ 1"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1], got {delta}")));
    }
    let GenBoundInputs { lambda1, lambda0, r2, m_label, delta_mu_norm, k_group_norm, empirical_risk } = *inputs;
    let mf = m as f64;
    let m1 = 2.0 * (1.0 + (lambda1 * r2 / lambda0).sqrt()) * m_label;
    let lead = 2.0 * lambda1 * r2 / lambda0;
    let m2 = lead * (1.0 + delta_mu_norm * k_group_norm / (2.0 * lambda0)) * m_label;
    let m2_simplified = lead * (1.0 + lambda1 / lambda0) * m_label;
    let sqrt_term = ((1.0 / delta).ln() / (2.0 * mf)).sqrt();
    let eval = |m2: f64| empirical_risk + 2.0 * m1 * m2 / mf + (1.0 + 16.0 * m2 / m1) * (m1 * m2 / 4.0) * sqrt_term;
    Ok(GenBound { m1, m2, m2_simplified, sqrt_term, value: eval(m2), value_simplified: eval(m2_simplified) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct M2Check {
    /// `‖Δμ‖₁ ‖K_c‖_{2,∞}`
    pub lhs: f64,
    /// `2Λ₁`
    pub rhs: f64,
}

impl M2Check {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-12)
    }
}

/// Checks `‖Δμ‖₁ ‖K_c‖_{2,∞} ≤ 2Λ₁` for trace-one base kernels and
/// weights of L1 norm at most `Λ₁`.
pub fn m2_simplification_check(bank: &BaseKernelBank, mu: &[f64], mu_prime: &[f64], lambda1: f64) -> Result<M2Check> {
    if mu.len() != bank.len() || mu_prime.len() != bank.len() {
        return Err(Error::DimensionMismatch { expected: bank.len(), found: mu.len().min(mu_prime.len()) });
    }
    for k in bank.kernels() {
        if (k.trace() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("base kernels must have trace one, found {}", k.trace())));
        }
    }
    let l1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
    if l1(mu) > lambda1 * (1.0 + 1e-12) || l1(mu_prime) > lambda1 * (1.0 + 1e-12) {
        return Err(Error::invalid("weights exceed the L1 radius"));
    }
    let dmu: f64 = mu.iter().zip(mu_prime).map(|(a, b)| (b - a).abs()).sum();
    Ok(M2Check { lhs: dmu * group_norm(bank.centered(), f64::INFINITY)?, rhs: 2.0 * lambda1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::FiniteDistribution;
    use crate::kernel::trace_normalize;
    use rand::Rng;

    #[test]
    fn identity_examples() {
        assert_eq!(delta_mu_identity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(delta_mu_identity(&[1.0, 2.0], &[2.0, 4.0]).unwrap() < 1e-15);
        assert!(delta_mu_identity(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn identity_on_random_pairs() {
        let mut rng = crate::rng::seeded(1);
        for i in 0..1000 {
            let p = rng.random_range(1..8);
            let v: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
            let vp: Vec<f64> = match i % 3 {
                // near parallel
                0 => v.iter().map(|x| 1.7 * x + 1e-9 * rng.random_range(-1.0..1.0)).collect(),
                _ => (0..p).map(|_| rng.random_range(-2.0..2.0)).collect(),
            };
            if vp.iter().all(|&x| x == 0.0) || v.iter().all(|&x| x == 0.0) {
                continue;
            }
            assert!(delta_mu_identity(&v, &vp).unwrap() <= 1e-12);
        }
    }

    fn specs() -> Vec<KernelSpec> {
        vec![
            KernelSpec::Linear { offset: 1.0 },
            KernelSpec::Gaussian { gamma: 0.5 },
            KernelSpec::Gaussian { gamma: 2.0 },
        ]
    }

    #[test]
    fn identical_replacement_gives_zero() {
        let dist = FiniteDistribution::two_point_noisy(0.5, 0.2).unwrap();
        let s = dist.sample(12, &mut crate::rng::seeded(4)).unwrap();
        let probe = qp_stability_check(&specs(), &s, 3, &s.point(3), s.labels()[3], NnqpOptions::default()).unwrap();
        assert!(probe.delta_v.iter().all(|&d| d == 0.0));
        assert_eq!(probe.lhs, 0.0);
        assert!(probe.holds());
    }

    #[test]
    fn inequality_on_random_perturbations() {
        let mut rng = crate::rng::seeded(7);
        for _ in 0..50 {
            let rows: Vec<Vec<f64>> = (0..15).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
            let y: Vec<f64> = rows.iter().map(|r| if r[0] + 0.3 * r[1] > 0.0 { 1.0 } else { -1.0 }).collect();
            let s = Sample::from_rows(&rows, &y).unwrap();
            let idx = rng.random_range(0..15);
            let pt = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let probe = qp_stability_check(&specs(), &s, idx, &pt, -y[idx], NnqpOptions::default()).unwrap();
            assert!(probe.holds(), "{probe:?}");
        }
    }

    #[test]
    fn group_norm_examples() {
        let a = GramMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]))).unwrap();
        let b = GramMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 0.0]))).unwrap();
        assert!((group_norm(&[a.clone(), b.clone()], 2.0).unwrap() - 5.0).abs() < 1e-12);
        assert!((group_norm(&[a, b], f64::INFINITY).unwrap() - 4.0).abs() < 1e-12);
    }

    fn inputs() -> GenBoundInputs {
        GenBoundInputs {
            lambda1: 1.0,
            lambda0: 0.5,
            r2: 1.0,
            m_label: 1.0,
            delta_mu_norm: 0.1,
            k_group_norm: 1.0,
            empirical_risk: 0.2,
        }
    }

    #[test]
    fn generalization_bound_algebra() {
        let b = generalization_bound_value(&inputs(), 100, 1.0).unwrap();
        assert_eq!(b.sqrt_term, 0.0);
        let m1 = 2.0 * (1.0 + 2f64.sqrt());
        assert!((b.m1 - m1).abs() < 1e-12);
        assert!((b.m2 - 4.0 * (1.0 + 0.1)).abs() < 1e-12);
        assert!((b.m2_simplified - 4.0 * 3.0).abs() < 1e-12);
        assert!((b.value - (0.2 + 2.0 * b.m1 * b.m2 / 100.0)).abs() < 1e-12);

        let s1 = generalization_bound_value(&inputs(), 100, 0.05).unwrap().sqrt_term;
        let s4 = generalization_bound_value(&inputs(), 400, 0.05).unwrap().sqrt_term;
        assert!((s4 / s1 - 0.5).abs() < 0.01);

        let mut bad = inputs();
        bad.lambda0 = 0.0;
        assert!(generalization_bound_value(&bad, 10, 0.1).is_err());
        assert!(generalization_bound_value(&inputs(), 10, 0.0).is_err());
    }

    #[test]
    fn m2_simplification_on_perturbed_alignf_runs() {
        let mut rng = crate::rng::seeded(12);
        let lambda1 = 1.0;
        for _ in 0..20 {
            let rows: Vec<Vec<f64>> = (0..14).map(|_| vec![rng.random_range(-1.0..1.0)]).collect();
            let y: Vec<f64> = rows.iter().map(|r| if r[0] > 0.1 { 1.0 } else { -1.0 }).collect();
            let s = Sample::from_rows(&rows, &y).unwrap();
            let probe = qp_stability_check(&specs(), &s, 0, &[rng.random_range(-1.0..1.0)], 1.0, NnqpOptions::default()).unwrap();
            let to_l1 = |v: &[f64]| {
                let n: f64 = v.iter().sum();
                v.iter().map(|x| lambda1 * x / n).collect::<Vec<_>>()
            };
            let kernels = specs().iter().map(|k| trace_normalize(&gram(k, &s).unwrap()).unwrap()).collect();
            let bank = BaseKernelBank::new(kernels).unwrap();
            let check = m2_simplification_check(&bank, &to_l1(&probe.v), &to_l1(&probe.v_prime), lambda1).unwrap();
            assert!(check.holds(), "{check:?}");
        }
    }
}
