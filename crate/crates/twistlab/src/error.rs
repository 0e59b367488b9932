use thiserror::Error;

/// Error taxonomy shared by every module.
///
/// `Usage` means the caller violated a precondition (bad dimensions, empty
/// search window, hypothesis of a formula not satisfied, malformed input).
/// `Resource` means a search was refused because it would exceed a declared
/// enumeration budget; results are never silently truncated.
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage: {0}")]
    Usage(String),
    #[error("resource budget exceeded: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Usage(_))
    }

    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource(_))
    }
}
