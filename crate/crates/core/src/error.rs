use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain of the operation (even character, non-discriminant, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure could not certify its result.
    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("overflow: {0}")]
    Overflow(String),

    /// A truncated series does not carry enough terms for the request.
    #[error("insufficient precision: need {needed}, have {available}")]
    Precision { needed: usize, available: usize },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
