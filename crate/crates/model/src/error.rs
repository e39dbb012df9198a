use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),

    #[error("malformed token frame: {0}")]
    TokenFrame(String),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("malformed model file: {0}")]
    BadFile(String),

    #[error(transparent)]
    Nn(#[from] dfax_nn::NnError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
