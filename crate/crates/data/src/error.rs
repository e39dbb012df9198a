use dfax_automata::AutomataError;
use thiserror::Error;

/// Errors produced while generating, encoding or persisting datasets.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid dataset configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "language too sparse for label {label} in lengths {min_len}..={max_len}: \
         need {needed} distinct strings, only {available} exist"
    )]
    Infeasible { label: u8, min_len: usize, max_len: usize, needed: usize, available: u128 },
    #[error("string count overflow; shrink the length window")]
    Overflow,
    #[error("sequence of {len} symbols exceeds the limit of {max}")]
    Overlength { len: usize, max: usize },
    #[error(transparent)]
    Automata(#[from] AutomataError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed dataset file: {0}")]
    Malformed(String),
    #[error("dataset checksum mismatch: stored {stored}, computed {computed}")]
    ChecksumMismatch { stored: String, computed: String },
    #[error("dataset invariant violated: {0}")]
    Invalid(String),
}
