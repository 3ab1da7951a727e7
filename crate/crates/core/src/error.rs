//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad user input: out-of-range values, shape mismatches, malformed files.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The requested operation is not available for this estimation method
    /// (e.g. credible intervals on a point-estimate model).
    #[error("not supported: {0}")]
    Capability(String),

    /// Numerical failure during fitting or sampling.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The mixture density is exactly zero at an observation, so the
    /// log-likelihood is -inf.
    #[error("zero mixture density at observation {obs}")]
    ZeroDensity { obs: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed or incompatible model file.
    #[error("model file: {0}")]
    Format(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn capability(msg: impl Into<String>) -> Self {
        Error::Capability(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit code used by the command-line tool:
    /// 2 validation, 3 capability, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) | Error::Io(_) | Error::Format(_) => 2,
            Error::Capability(_) => 3,
            Error::Numerical(_) | Error::ZeroDensity { .. } => 4,
        }
    }
}
