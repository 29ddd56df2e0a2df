use thiserror::Error;

/// Errors raised by the numerical kernels and the file formats.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the inputs does not hold.
    #[error("validation error: {0}")]
    Validation(String),
    /// A transform plan cannot be built for the given grid.
    #[error("plan error: {0}")]
    Plan(String),
    /// A computation produced a value outside its contract.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// A file does not follow its declared format.
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn validation<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
