//! Library side of the `infoinv` command-line tool.

pub mod commands;
pub mod expr;
pub mod resolve;

use std::fmt;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Malformed expressions, unreadable files, bad grids.
    Parse(String),
    /// Inputs that parse but fail numerical validation.
    Validation(String),
    /// A size cap of an enumeration routine was hit.
    Cap(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Cap(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
            CliError::Cap(m) => write!(f, "size cap exceeded: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<infoinv::Error> for CliError {
    fn from(e: infoinv::Error) -> Self {
        match e {
            infoinv::Error::Unsupported(_) => CliError::Cap(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<expr::ParseError> for CliError {
    fn from(e: expr::ParseError) -> Self {
        CliError::Parse(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
