//! Experiment harness around `centalign`: cross-validated comparisons of
//! kernel-learning methods, alignment/accuracy correlation reports, the
//! theory bench and the `centalign` command line.

pub mod app;
pub mod bench;
pub mod correlate;
pub mod error;
pub mod experiment;
pub mod output;
pub mod stats;

pub use error::{HarnessError, Result};

/// Schema version stamped on every JSON report.
pub const SPEC_VERSION: &str = "1.0";
