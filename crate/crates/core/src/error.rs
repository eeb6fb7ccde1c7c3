use thiserror::Error;

/// Errors shared by every module of the workbench.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Malformed or out-of-range input.
    #[error("input error: {0}")]
    Input(String),
    /// An exhaustive search would exceed the caller's budget; nothing was sampled.
    #[error("budget exceeded: {0}")]
    Budget(String),
    /// A quantity that is undefined for the given input (e.g. dimension of an empty system).
    #[error("undefined: {0}")]
    Undefined(String),
    /// A construction could not be completed (stuck search, failed retries).
    #[error("construction failed: {0}")]
    Construction(String),
    /// An internal postcondition failed. Always a bug.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
