use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Caller supplied an input that violates an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A constructive routine could not produce a numerically sound object.
    #[error("construction failed: {0}")]
    Construction(String),

    /// Exact rational arithmetic left the 64-bit range.
    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    /// An internal consistency check failed. Always a bug.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
