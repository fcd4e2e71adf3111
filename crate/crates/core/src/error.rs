use thiserror::Error;

/// Errors raised by every layer of the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("cap exceeded: {what} needs {needed} but the cap is {cap}")]
    CapExceeded { what: String, needed: u64, cap: u64 },
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
