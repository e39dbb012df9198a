//! Neural acceptors for regular-language strings: an encoder-only
//! transformer trained against ground truth, and a recurrent
//! continuous-state automaton distilled from it with representation
//! alignment, sharing the transformer's frozen classifier.

mod check;
mod dcsa;
mod error;
mod transformer;

pub use check::{dcsa_grad_check, transformer_grad_check};
pub use dcsa::{
    build_dcsa, distill, rep_state_diff, Alternation, DcsaKind, DcsaModel, DcsaState,
    DistillConfig, DistillHistory,
};
pub use error::ModelError;
pub use transformer::{
    build_transformer, train_transformer, TrainConfig, TrainingMeta, TransformerConfig,
    TransformerModel, BATCH_SIZE,
};
