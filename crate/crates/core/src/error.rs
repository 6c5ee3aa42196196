use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GicError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("outside the domain of the operation: {0}")]
    Domain(String),
    #[error("genie parameters infeasible: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, GicError>;

pub(crate) fn domain(msg: impl Into<String>) -> GicError {
    GicError::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> GicError {
    GicError::InvalidInput(msg.into())
}
