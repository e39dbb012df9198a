use dfax_automata::AutomataError;
use dfax_model::ModelError;
use dfax_nn::NnError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cell {cell} cannot be split: {reason}")]
    CannotSplit { cell: usize, reason: String },
    #[error("cell mismatch: expected both vectors in cell {expected}, found {found_a} and {found_b}")]
    CellMismatch { expected: usize, found_a: usize, found_b: usize },
    #[error("vector has {found} dimensions, partition expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error(transparent)]
    Automata(#[from] AutomataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Nn(#[from] NnError),
}
