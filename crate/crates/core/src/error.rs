//! Crate-wide error type.

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by simulation, parsing, and validation code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value is missing, malformed, or out of range.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument violates a documented function contract.
    #[error("domain error: {0}")]
    Domain(String),

    /// A data file could not be parsed; `row` is 1-based.
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    /// Structurally valid input that fails a semantic check.
    #[error("validation error: {0}")]
    Validation(String),

    /// No feasible choice exists (e.g. no processing rate meets the deadline).
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Forecaster training could not complete.
    #[error("training error: {0}")]
    Training(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
