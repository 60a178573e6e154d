//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by validation, numerics, and I/O across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vector must have at least one entry")]
    EmptyVector,

    #[error("non-finite entry at index {index}")]
    NonFiniteEntry { index: usize },

    #[error("scale entries must be strictly positive (index {index})")]
    NonPositiveScale { index: usize },

    #[error("non-finite input: {0}")]
    NonFiniteInput(f64),

    #[error("argument outside the valid domain: {0}")]
    OutOfDomain(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("invalid probability bounds: pa_lower={pa_lower}, pb_upper={pb_upper}")]
    InvalidBounds { pa_lower: f64, pb_upper: f64 },

    #[error("pa_lower={0} is below 1/2")]
    BelowHalf(f64),

    #[error("linear classifier weight vector is all zeros")]
    ZeroWeight,

    #[error("training diverged: loss became non-finite at epoch {epoch}")]
    DivergenceDetected { epoch: usize },

    #[error("invalid configuration: {0}")]
    ConfigError(String),

    #[error("report has no rows")]
    EmptyReport,

    #[error("reports cover different test sets: {0}")]
    MismatchedTestSets(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
