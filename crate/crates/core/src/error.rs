use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the estimation, evaluation and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular operator: leading coefficient is zero")]
    SingularOperator,

    #[error("unstable filter {filter:?}: max root modulus {max_modulus}")]
    Unstable { filter: Vec<f64>, max_modulus: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite loss in {term} term: {breakdown}")]
    NonFinite { term: String, breakdown: String },

    #[error("insufficient decay: energy decay curve bottoms out at {floor_db:.1} dB (need {needed_db} dB)")]
    InsufficientDecay { floor_db: f64, needed_db: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
