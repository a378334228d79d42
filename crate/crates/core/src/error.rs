use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("energy gain undefined: algorithm energy is zero while the reference is {reference} J")]
    UndefinedGain { reference: f64 },

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("malformed model: {0}")]
    MalformedModel(String),

    #[error("arithmetic overflow while {0}")]
    Overflow(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
