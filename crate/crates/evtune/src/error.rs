//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A value fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A root bracket could not be established inside the open domain.
    #[error("domain exhausted: {0}")]
    DomainExhausted(String),

    /// The linearized system was numerically singular.
    #[error("singular Jacobian: |J| = {jacobian:.3e}")]
    Singular { jacobian: f64 },

    /// A text record could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Structurally valid input violated a data invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A simulation was refused because it exceeds the configured size cap.
    #[error("size guard: {requested} pixel-steps exceeds cap of {cap}")]
    SizeGuard { requested: u64, cap: u64 },

    /// The rate source cannot produce the requested rate at any bias.
    #[error("unreachable target: {0}")]
    UnreachableTarget(String),

    /// A tuned bias sat clamped at its range limit without converging.
    #[error("bias range exhausted: {0}")]
    RangeExhausted(String),

    /// Every cell of a sweep failed to converge.
    #[error("sweep failed: no cell converged")]
    SweepFailed,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
