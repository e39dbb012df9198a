//! Labeled dataset generation for regular-language acceptors.
//!
//! Samples balanced positive/negative string sets from a deterministic
//! automaton, uniformly within each (length, label) cell via a counting
//! table, and persists them as JSON lines with an integrity checksum.

mod config;
mod count;
mod dataset;
mod encode;
mod error;
mod generate;

pub use config::DatasetConfig;
pub use dataset::{LabeledSequence, SequenceDataset, Split};
pub use encode::{encode_word, frame_tokens, vocab_size, CLS_ID, SEP_ID, SYMBOL_OFFSET};
pub use error::DataError;
pub use generate::generate_dataset;
