//! Hand-built recurrent models with exactly known behavior, for unit tests.

use dfax_automata::Alphabet;
use dfax_model::{DcsaKind, DcsaModel};
use dfax_nn::{ParamStore, Tensor};

use crate::partition::Partition;

/// One-dimensional input-independent cell: h' = tanh(weight * h + bias)
/// from h0, classified as label 1 while h > 0. Both symbol embeddings are
/// zero, so only string length matters.
pub fn length_stub(weight: f64, bias: f64, h0: f64) -> DcsaModel {
    let mut trainable = ParamStore::new();
    trainable.insert("embed.token", Tensor::zeros(4, 1));
    trainable.insert("cell.wx", Tensor::zeros(1, 1));
    trainable.insert("cell.wh", Tensor::scalar(weight));
    trainable.insert("cell.b", Tensor::scalar(bias));
    trainable.insert("init.s0", Tensor::scalar(h0));
    let mut frozen = ParamStore::new();
    frozen.insert("classifier.weight", Tensor::matrix(1, 2, vec![0.0, 1.0]).unwrap());
    frozen.insert("classifier.bias", Tensor::row(vec![0.0, 0.0]));
    DcsaModel {
        kind: DcsaKind::Rnn,
        alphabet: Alphabet::binary(),
        state_dim: 1,
        seed: 0,
        trainable,
        frozen,
        source_transformer_hash: String::new(),
        distill_meta: None,
    }
}

/// Accepts exactly the non-empty strings: the state jumps from 0 to
/// tanh(1) on the first symbol and stays there.
pub fn nonempty_stub() -> DcsaModel {
    length_stub(0.0, 1.0, 0.0)
}

/// Accepts exactly the even-length strings: tanh(-2 h) near its 2-cycle
/// flips the state's sign on every symbol.
pub fn even_length_stub() -> DcsaModel {
    length_stub(-2.0, 0.0, 0.95)
}

/// Accepts exactly the strings whose length is divisible by 4: the state
/// rotates a quarter turn per symbol through (+,0), (0,+), (-,0), (0,-),
/// and the classifier sees only the first coordinate's sign. The initial
/// two-cell partition lumps three of the four phases together, so
/// extraction must refine to tell them apart.
pub fn quarter_turn_stub() -> DcsaModel {
    let mut trainable = ParamStore::new();
    trainable.insert("embed.token", Tensor::zeros(4, 2));
    trainable.insert("cell.wx", Tensor::zeros(2, 2));
    // Row-vector recurrence h' = tanh(h . W): sends (a, b) to (-2b, 2a).
    trainable.insert("cell.wh", Tensor::matrix(2, 2, vec![0.0, 2.0, -2.0, 0.0]).unwrap());
    trainable.insert("cell.b", Tensor::row(vec![0.0, 0.0]));
    trainable.insert("init.s0", Tensor::row(vec![0.95, 0.0]));
    let mut frozen = ParamStore::new();
    frozen.insert("classifier.weight", Tensor::matrix(2, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap());
    frozen.insert("classifier.bias", Tensor::row(vec![0.0, 0.0]));
    DcsaModel {
        kind: DcsaKind::Rnn,
        alphabet: Alphabet::binary(),
        state_dim: 2,
        seed: 0,
        trainable,
        frozen,
        source_transformer_hash: String::new(),
        distill_meta: None,
    }
}

/// Minimal acceptor for even-length strings.
pub fn even_length_dfa() -> dfax_automata::Dfa {
    dfax_automata::Dfa::new(
        Alphabet::binary(),
        0,
        vec![true, false],
        vec![vec![1, 1], vec![0, 0]],
    )
    .unwrap()
}

/// Minimal acceptor for strings whose length is divisible by 4.
pub fn quarter_cycle_dfa() -> dfax_automata::Dfa {
    dfax_automata::Dfa::new(
        Alphabet::binary(),
        0,
        vec![true, false, false, false],
        vec![vec![1, 1], vec![2, 2], vec![3, 3], vec![0, 0]],
    )
    .unwrap()
}

pub fn classifier_partition(dcsa: &DcsaModel) -> Partition {
    Partition::from_classifier(
        dcsa.frozen.get("classifier.weight").unwrap(),
        dcsa.frozen.get("classifier.bias").unwrap(),
    )
    .unwrap()
}
