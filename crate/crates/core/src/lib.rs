//! Centered kernel alignment and alignment-based multiple kernel learning.
//!
//! The crate is organised bottom-up:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`kernel`] | kernel functions, Gram matrices, centering, Frobenius algebra, base-kernel banks |
//! | [`alignment`] | centered / uncentered / unnormalized alignment, population alignment, the `(a, M)` system |
//! | [`two_stage`] | `align`, `lq`, `alignf` and closed-form weight learners plus the non-negative QP solver |
//! | [`predictors`] | KRR and SVM second stages, `unif`, `l1-svm`, `l2-krr` and the single-stage alignment learner |
//! | [`theory`] | Monte-Carlo and algebraic checks of the concentration, existence and stability results |
//! | [`data`] | CSV / libsvm loading, synthetic generators, preprocessing and bank builders |
//!
//! ```
//! use centalign::kernel::GramMatrix;
//! use centalign::alignment::{centered_alignment, target_kernel};
//! use nalgebra::DMatrix;
//!
//! let k = GramMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0])).unwrap();
//! let ky = target_kernel(&[1.0, -1.0]);
//! assert!((centered_alignment(&k, &ky).unwrap() - 1.0).abs() < 1e-12);
//! ```

pub mod alignment;
pub mod data;
mod error;
pub mod kernel;
pub(crate) mod linalg;
pub mod predictors;
pub mod rng;
pub mod theory;
pub mod two_stage;

pub use error::{Error, Result};

/// Learning task. Decides the second-stage learner and the error measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}
