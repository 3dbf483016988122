//! Numerical checks of the learning-theoretic guarantees for centered
//! alignment: concentration of the empirical alignment, existence of good
//! predictors for well-aligned kernels, and stability of the
//! alignment-maximizing weights.
//!
//! Population quantities are only available for finite-support
//! distributions, where they are computed by exact enumeration.

mod concentration;
mod predictor;
mod stability;

use serde::{Deserialize, Serialize};

use crate::alignment::{Atom, FiniteDistribution};
use crate::Result;

pub use concentration::{
    concentration_trial, one_point_delta, perturbation_check, ConcentrationConfig, ConcentrationReport,
    ConcentrationRow, PerturbationReport,
};
pub use predictor::{g_star_diagnostics, predictor_diagnostics, GStarDiagnostics, PredictorDiagnostics};
pub use stability::{
    delta_mu_identity, generalization_bound_value, group_norm, m2_simplification_check, qp_stability_check,
    GenBound, GenBoundInputs, M2Check, StabilityProbe,
};

/// Named distribution families or an explicit atom list, as found in
/// configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionSpec {
    TwoPoint { alpha: f64 },
    TwoPointNoisy { alpha: f64, flip: f64 },
    Atoms(Vec<Atom>),
}

impl DistributionSpec {
    pub fn build(&self) -> Result<FiniteDistribution> {
        match self {
            DistributionSpec::TwoPoint { alpha } => FiniteDistribution::two_point(*alpha),
            DistributionSpec::TwoPointNoisy { alpha, flip } => FiniteDistribution::two_point_noisy(*alpha, *flip),
            DistributionSpec::Atoms(atoms) => FiniteDistribution::new(atoms.clone()),
        }
    }
}

/// `q`-quantile of `values` by linear interpolation on the sorted copy.
pub(crate) fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}
