use crate::{NodeId, ParamStore, StreamRng, Tape};

const FD_STEP: f64 = 1e-5;

/// Compare analytic gradients against central finite differences on
/// `probes` randomly chosen parameter coordinates; returns the largest
/// scaled error max(|analytic − numeric|) / max(1, |analytic|, |numeric|).
///
/// The forward closure must be deterministic: it records the model loss on
/// the given tape from the given parameters.
pub fn grad_check<F>(forward: F, params: &ParamStore, probes: usize, rng: &mut StreamRng) -> f64
where
    F: Fn(&mut Tape, &ParamStore) -> NodeId,
{
    let mut tape = Tape::new();
    let loss = forward(&mut tape, params);
    let analytic = tape.backward(loss, params).expect("forward closure yields a scalar loss");

    let names: Vec<String> = params.names().map(str::to_string).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let name = &names[rng.below(names.len())];
        let len = params.get(name).expect("known name").len();
        let coord = rng.below(len);

        let eval = |delta: f64| {
            let mut perturbed = params.clone();
            perturbed.get_mut(name).expect("known name").data_mut()[coord] += delta;
            let mut tape = Tape::new();
            let loss = forward(&mut tape, &perturbed);
            tape.item(loss)
        };
        let numeric = (eval(FD_STEP) - eval(-FD_STEP)) / (2.0 * FD_STEP);
        let grad = analytic.get(name).expect("gradient for every param").data()[coord];
        let scale = grad.abs().max(numeric.abs()).max(1.0);
        worst = worst.max((grad - numeric).abs() / scale);
    }
    worst
}
