use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed arguments: dimension mismatch, non-symmetric input, bad config.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// Non-finite mean at a particular observation.
    #[error("numeric failure at row {row}: {reason}")]
    RowFailure { row: usize, reason: String },

    /// Rank deficiency of the design or of the weighted cross-product matrix.
    #[error("collinearity failure: {0}")]
    Collinearity(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("Bell number index {index} exceeds cap {cap}")]
    Overflow { index: usize, cap: usize },

    #[error("simulation cell failed: {0}")]
    CellFailure(String),
}
