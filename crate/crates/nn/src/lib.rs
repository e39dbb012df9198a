//! Minimal dense-tensor engine for very small models: f64 tensors, a
//! reverse-mode autodiff tape, AdamW, seedable random streams and a
//! finite-difference gradient checker.
//!
//! A [`Tape`] and the [`ParamStore`] it reads are confined to one thread for
//! the duration of a training step; frozen stores are immutable and may be
//! shared freely.

mod check;
mod error;
mod kernels;
mod optim;
mod rng;
mod store;
mod tape;
mod tensor;

pub use check::grad_check;
pub use error::NnError;
pub use optim::{
    adamw_step, AdamWState, ADAMW_BETA1, ADAMW_BETA2, ADAMW_EPS, ADAMW_WEIGHT_DECAY,
};
pub use rng::StreamRng;
pub use store::ParamStore;
pub use tape::{Axis, NodeId, Tape, LAYER_NORM_EPS};
pub use tensor::Tensor;
