//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on a function argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A feature column is constant in the training data, so the min-max
    /// normalizer for that dimension is undefined.
    #[error("feature dimension {dim} is degenerate (constant in training data)")]
    DegenerateFeature { dim: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// A tuple count no longer fits in a u64.
    #[error("count exceeds u64 range")]
    CountOverflow,

    #[error("index matrix would need {needed} entries, budget is {budget}")]
    MemoryBudget { needed: u64, budget: u64 },

    #[error("Gram factorization failed even after diagonal jitter")]
    GramFactorization,

    /// Surfaced by the CLI as exit code 3.
    #[error("solver did not converge within the sweep budget")]
    NotConverged,

    #[error("model file rejected: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("model JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
}
