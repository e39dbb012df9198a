use dfax_automata::AutomataError;
use dfax_data::DataError;
use dfax_extract::ExtractError;
use dfax_model::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("evaluation set is empty")]
    EmptyItems,
    #[error("{stage} stage failed: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("consistency rates violate the agreement bound: {0}")]
    Coherence(String),
    #[error("unrecognized model file {path}: {reason}")]
    UnknownModel { path: String, reason: String },
    #[error(transparent)]
    Automata(#[from] AutomataError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl EvalError {
    /// Wraps any error with the pipeline stage it came from.
    pub fn at_stage(stage: &'static str, err: impl std::fmt::Display) -> EvalError {
        EvalError::Stage { stage, message: err.to_string() }
    }
}
