use crate::dcsa::DcsaModel;
use crate::transformer::TransformerModel;
use dfax_nn::{grad_check, StreamRng, Tape};

/// Worst finite-difference error of the classification loss gradient over
/// `probes` random parameter coordinates of the full encoder.
pub fn transformer_grad_check(
    model: &TransformerModel,
    ids: &[usize],
    label: usize,
    probes: usize,
    seed: u64,
) -> f64 {
    let config = model.config.clone();
    let mut rng = StreamRng::new(seed, "transformer-gradcheck");
    grad_check(
        |tape: &mut Tape, params| {
            let logits = crate::transformer::logits_on_tape(tape, params, &config, ids)
                .expect("well-formed frame");
            tape.cross_entropy(logits, label).expect("two logits")
        },
        &model.params,
        probes,
        &mut rng,
    )
}

/// Worst finite-difference error of the distillation classification loss
/// over `probes` random trainable coordinates of the cell.
pub fn dcsa_grad_check(
    model: &DcsaModel,
    tokens: &[usize],
    label: usize,
    probes: usize,
    seed: u64,
) -> f64 {
    let kind = model.kind;
    let w = model.frozen.get("classifier.weight").expect("frozen classifier").clone();
    let b = model.frozen.get("classifier.bias").expect("frozen classifier").clone();
    let mut rng = StreamRng::new(seed, "dcsa-gradcheck");
    grad_check(
        |tape: &mut Tape, params| {
            let h = crate::dcsa::run_on_tape(tape, params, kind, tokens).expect("valid tokens");
            let wn = tape.constant(w.clone()).expect("finite");
            let bn = tape.constant(b.clone()).expect("finite");
            let wl = tape.matmul(h, wn).expect("shapes agree");
            let logits = tape.add_row(wl, bn).expect("shapes agree");
            tape.cross_entropy(logits, label).expect("two logits")
        },
        &model.trainable,
        probes,
        &mut rng,
    )
}
