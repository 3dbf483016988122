//! Second-stage learners and the joint kernel learners used as baselines.
//!
//! Kernel values between test and training points are passed in as a
//! `test × train` block; models never see feature vectors.

mod krr;
mod mkl;
mod pgd;
mod svm;

use nalgebra::{DMatrix, DVector};

pub use krr::{krr_fit, KrrModel};
pub use mkl::{l1svm_learn, l2krr_learn, onestage_learn, JointFit, OneStageConfig, OneStageObjective, OuterOptions};
pub use svm::{svm_fit, SvmModel, SvmOptions};

use crate::two_stage::{MixtureWeights, NormKind};
use crate::{Error, Result};

/// A fitted second-stage model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Krr(KrrModel),
    Svm(SvmModel),
}

impl Model {
    /// Real-valued outputs: `K_cross·α` for KRR, `K_cross·(α⊙y)` for SVM.
    pub fn predict(&self, k_cross: &DMatrix<f64>) -> Result<DVector<f64>> {
        match self {
            Model::Krr(m) => m.predict(k_cross),
            Model::Svm(m) => m.decision(k_cross),
        }
    }

    /// `sign(f(x))` with `sign(0) = +1`.
    pub fn classify(&self, k_cross: &DMatrix<f64>) -> Result<DVector<f64>> {
        Ok(self.predict(k_cross)?.map(|v| if v >= 0.0 { 1.0 } else { -1.0 }))
    }
}

impl From<KrrModel> for Model {
    fn from(m: KrrModel) -> Self {
        Model::Krr(m)
    }
}

impl From<SvmModel> for Model {
    fn from(m: SvmModel) -> Self {
        Model::Svm(m)
    }
}

/// `μ_k = Λ/p`.
pub fn unif_weights(p: usize, radius: f64) -> Result<MixtureWeights> {
    if p == 0 {
        return Err(Error::param("unif needs at least one base kernel"));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::param(format!("Lambda must be > 0, got {radius}")));
    }
    Ok(MixtureWeights { mu: vec![radius / p as f64; p], norm_kind: NormKind::L1, radius })
}

/// Fraction of sign disagreements between predictions and ±1 labels.
pub fn misclassification(pred: &DVector<f64>, y: &[f64]) -> f64 {
    let wrong = pred.iter().zip(y).filter(|(p, t)| (**p >= 0.0) != (**t > 0.0)).count();
    wrong as f64 / y.len().max(1) as f64
}

pub fn rmse(pred: &DVector<f64>, y: &[f64]) -> f64 {
    let se: f64 = pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum();
    (se / y.len().max(1) as f64).sqrt()
}
