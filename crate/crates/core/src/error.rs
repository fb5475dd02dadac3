use thiserror::Error;

use crate::symbolexpr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or ill-formed configuration (partition, shifts, symbol mix).
    #[error("validation error: {0}")]
    Validation(String),

    /// Combination the implemented formulas do not cover.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A numerical result failed an internal consistency check.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Process exit code for the CLI: 2 validation, 3 numerical, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Unsupported(_) | Error::Parse(_) | Error::Config(_) => 2,
            Error::Domain(_) | Error::Numerical(_) | Error::Eval(_) => 3,
            Error::Io(_) => 4,
        }
    }
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
