use thiserror::Error;

/// Errors raised by the simulation kernels.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated a precondition (bad index, mismatched sizes, invalid parameter).
    #[error("usage error: {0}")]
    Usage(String),
    /// A numerical routine failed to produce a trustworthy result.
    #[error("computational error: {0}")]
    Computation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}
