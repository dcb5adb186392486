use thiserror::Error;

/// Errors raised by the discrete machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("domain overflow: {0}")]
    DomainOverflow(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("empty scale range")]
    EmptyRange,
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
