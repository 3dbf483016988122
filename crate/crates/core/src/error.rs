use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e}, tolerance {tolerance:e})")]
    NotPsd { min_eigenvalue: f64, tolerance: f64 },

    /// Zero centered (or uncentered, or trace) norm. `indices` lists the
    /// offending base kernels when the failure comes from a bank.
    #[error("degenerate kernel{}: {reason}", fmt_indices(.indices))]
    DegenerateKernel { indices: Vec<usize>, reason: String },

    #[error("no alignment signal: every base kernel has zero alignment with the target")]
    NoSignal,

    #[error("singular alignment system (min eigenvalue {min_eigenvalue:e} <= {threshold:e}); use alignf instead")]
    SingularSystem { min_eigenvalue: f64, threshold: f64 },

    /// Iteration budget exhausted. `best` is the best iterate seen.
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn fmt_indices(indices: &[usize]) -> String {
    if indices.is_empty() {
        String::new()
    } else {
        format!(" at base index {indices:?}")
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn degenerate(reason: impl Into<String>) -> Self {
        Error::DegenerateKernel {
            indices: Vec::new(),
            reason: reason.into(),
        }
    }
}
