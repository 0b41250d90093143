use thiserror::Error;

/// Errors raised anywhere in the crate.
///
/// The variant names double as the machine-readable `kind` in the CLI's
/// error JSON, so keep them stable.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("insufficient data quality: {0}")]
    Quality(String),

    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::Contract(_) => "contract",
            Error::Domain(_) => "domain",
            Error::Resource(_) => "resource",
            Error::Solver(_) => "solver",
            Error::Quality(_) => "quality",
            Error::Integrity(_) => "integrity",
            Error::Usage(_) => "usage",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
