//! Agreement evaluation and the end-to-end experiment pipeline.
//!
//! Four sequence classifiers come out of one run: the ground-truth language,
//! the trained transformer, its recurrent clone, and the automaton extracted
//! from the clone. This crate measures their pairwise agreement, drives the
//! whole chain from a single config, and exposes it all on the command line.

pub mod cli;
mod config;
mod error;
mod metrics;
mod pipeline;
mod report;

pub use config::{GrammarSpec, PipelineConfig, StageSeeds};
pub use error::EvalError;
pub use metrics::{agreement_count, consistency, labels_of, Constant, LabelFunction};
pub use pipeline::{finish_pipeline, prepare_base, run_pipeline, PipelineArtifacts, PipelineBase};
pub use report::{ConsistencyReport, SplitRates, StageTimings};
