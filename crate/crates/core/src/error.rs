use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Cross-references between objects do not line up (dangling ids, duplicates).
    #[error("integrity error: {0}")]
    Integrity(String),

    /// The brute-force oracle refuses instances it cannot enumerate.
    #[error("instance too large: {0}")]
    Size(String),

    /// A statistic or similarity has no defined value for the given input.
    #[error("undefined: {0}")]
    Undefined(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
