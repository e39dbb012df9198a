use thiserror::Error;

/// Errors produced by the tensor and training layer.
#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("unknown parameter '{0}'")]
    UnknownParam(String),
    #[error("parameter key sets differ: {0}")]
    KeyMismatch(String),
    #[error("loss must be a scalar, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("malformed parameter file: {0}")]
    BadFile(String),
}
