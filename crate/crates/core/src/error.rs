use thiserror::Error;

use crate::metric::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not a metric: {}", .0.summary())]
    InvalidMetric(ValidationReport),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid certificate: {}", .0.summary())]
    InvalidCertificate(ValidationReport),

    #[error("too many points: {got} (at most {max})")]
    TooManyPoints { got: usize, max: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("checksum mismatch: document refers to {expected}, input is {actual}")]
    StaleReport { expected: String, actual: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
