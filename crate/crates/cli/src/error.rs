use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] centalign::Error),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: centalign::Error,
    },

    /// Training-fold alignment of `alignf` fell below that of `unif`.
    #[error("fold {fold}: alignf alignment {alignf} is below unif alignment {unif}")]
    Dominance { fold: usize, alignf: f64, unif: f64 },

    #[error("cannot read config {}: {source}", path.display())]
    Config {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("cannot read config {}: {source}", path.display())]
    ConfigIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        HarnessError::Usage(msg.into())
    }

    fn core_code(e: &centalign::Error) -> i32 {
        match e {
            centalign::Error::NonConverged { .. } => 3,
            centalign::Error::InvalidParameter(_) => 1,
            _ => 2,
        }
    }

    /// 1 usage, 2 data or numerical error, 3 non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(e) | HarnessError::Fold { source: e, .. } => Self::core_code(e),
            HarnessError::Config { .. } | HarnessError::ConfigIo { .. } | HarnessError::Usage(_) => 1,
            HarnessError::Dominance { .. } | HarnessError::Io(_) | HarnessError::Csv(_) | HarnessError::Json(_) => 2,
        }
    }
}
