use thiserror::Error;

/// Failure modes shared by every engine in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The caller combined options that cannot work together.
    #[error("usage error: {0}")]
    Usage(String),
    /// The request is well formed but outside the regime where a closed form applies.
    #[error("outside validity regime: {0}")]
    Regime(String),
    /// An index walked past the range where a recursion is defined.
    #[error("range error: {0}")]
    Range(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A dense computation would exceed the desk-scale bound.
    #[error("resource limit: {0}")]
    Resource(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
