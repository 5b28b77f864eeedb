use thiserror::Error;

/// Errors raised by the planning library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error("invalid network: {0}")]
    Validation(String),
    #[error("invalid parameter `{name}`: {message}")]
    Parameter { name: String, message: String },
    #[error("problem too large: {0}")]
    Size(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { field: field.into(), message: message.into() }
    }

    pub fn param(name: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parameter { name: name.into(), message: message.into() }
    }

    /// True for errors caused by bad input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
