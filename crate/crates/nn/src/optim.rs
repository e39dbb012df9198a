use crate::{NnError, ParamStore, Tensor};
use std::collections::BTreeMap;

pub const ADAMW_BETA1: f64 = 0.9;
pub const ADAMW_BETA2: f64 = 0.999;
pub const ADAMW_EPS: f64 = 1e-8;
pub const ADAMW_WEIGHT_DECAY: f64 = 0.01;

/// First/second moment estimates plus the shared step counter. Weight decay
/// is decoupled and applied uniformly to every parameter.
#[derive(Debug, Clone)]
pub struct AdamWState {
    step: u64,
    m: BTreeMap<String, Tensor>,
    v: BTreeMap<String, Tensor>,
    weight_decay: f64,
}

impl AdamWState {
    /// Zero-initialized moments matching the parameter shapes, with the
    /// default decoupled weight decay.
    pub fn new(params: &ParamStore) -> AdamWState {
        Self::with_weight_decay(params, ADAMW_WEIGHT_DECAY)
    }

    pub fn with_weight_decay(params: &ParamStore, weight_decay: f64) -> AdamWState {
        let zeros = |t: &Tensor| Tensor::zeros(t.rows(), t.cols());
        AdamWState {
            step: 0,
            m: params.iter().map(|(n, t)| (n.to_string(), zeros(t))).collect(),
            v: params.iter().map(|(n, t)| (n.to_string(), zeros(t))).collect(),
            weight_decay,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One AdamW update over every parameter, in canonical name order.
pub fn adamw_step(
    params: &mut ParamStore,
    grads: &ParamStore,
    state: &mut AdamWState,
    lr: f64,
) -> Result<(), NnError> {
    let param_names: Vec<String> = params.names().map(str::to_string).collect();
    for name in &param_names {
        if !state.m.contains_key(name) {
            return Err(NnError::KeyMismatch(format!("optimizer state lacks '{name}'")));
        }
        grads
            .get(name)
            .map_err(|_| NnError::KeyMismatch(format!("gradients lack '{name}'")))?
            .ensure_finite(&format!("gradient of '{name}'"))?;
    }
    if grads.len() != param_names.len() {
        return Err(NnError::KeyMismatch(format!(
            "{} gradients for {} parameters",
            grads.len(),
            param_names.len()
        )));
    }

    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - ADAMW_BETA1.powi(t);
    let bias2 = 1.0 - ADAMW_BETA2.powi(t);

    for name in &param_names {
        let g = grads.get(name)?.data();
        let m = state.m.get_mut(name).expect("checked above").data_mut();
        let v = state.v.get_mut(name).expect("checked above").data_mut();
        let p = params.get_mut(name)?.data_mut();
        for i in 0..p.len() {
            m[i] = ADAMW_BETA1 * m[i] + (1.0 - ADAMW_BETA1) * g[i];
            v[i] = ADAMW_BETA2 * v[i] + (1.0 - ADAMW_BETA2) * g[i] * g[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            p[i] -= lr * (m_hat / (v_hat.sqrt() + ADAMW_EPS) + state.weight_decay * p[i]);
        }
    }
    Ok(())
}
