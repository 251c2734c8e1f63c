use thiserror::Error;

/// Errors raised by the analysis kernel.
#[derive(Debug, Error)]
pub enum Error {
    /// An iterative routine ran out of its iteration budget.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A matrix exponential or product left the representable range.
    #[error("overflow: {0}")]
    Overflow(String),
    /// Arguments outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Malformed system, signal or configuration data.
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
