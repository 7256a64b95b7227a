use thiserror::Error;

/// Errors shared by every module of the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Operand dimensions do not fit together.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Input is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Input exceeds a size cap of an enumeration routine.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// The linear-programming engine failed to terminate cleanly.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
