//! Crate-wide error type.
//!
//! Variants are grouped by the failure class they represent so that callers
//! (in particular the CLI) can map them onto process exit codes without
//! string-matching messages.

use thiserror::Error;

/// Errors produced by dataset handling, training, and verification.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad fractions, empty grids, malformed
    /// surrogate names, out-of-range hyperparameters.
    #[error("config error: {0}")]
    Config(String),

    /// Invalid or inconsistent data: schema/column mismatches, unparseable
    /// cells, empty groups, degenerate columns.
    #[error("data error: {0}")]
    Data(String),

    /// Numeric failure: non-finite objective, degenerate denominators,
    /// exhausted rejection samplers, non-differentiable surrogate in a
    /// gradient path.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Training diverged. Carries the objective trace for post-mortems.
    #[error("training diverged after {} epochs (last objective {:?})", trace.len(), trace.last())]
    Diverged { trace: Vec<f64> },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to.
    ///
    /// 1 for usage problems (bad flag values, invalid configuration), 2 for
    /// data problems, 3 for numeric/training failures. Verification
    /// violations (4) are not `Error` values; the CLI handles those
    /// separately.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Data(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 2,
            Error::Numeric(_) | Error::Diverged { .. } => 3,
        }
    }
}
