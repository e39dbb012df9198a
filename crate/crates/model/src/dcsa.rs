use crate::transformer::{label_from_logits, TransformerModel};
use crate::ModelError;
use dfax_automata::Alphabet;
use dfax_data::{frame_tokens, Split, SequenceDataset, SYMBOL_OFFSET};
use dfax_nn::{adamw_step, AdamWState, NodeId, ParamStore, StreamRng, Tape, Tensor};
use serde::{Deserialize, Serialize};
use std::path::Path;

const INIT_STD: f64 = 0.02;

/// Recurrent cell family driving the continuous-state automaton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DcsaKind {
    Rnn,
    Gru,
    Lstm,
}

impl DcsaKind {
    pub const ALL: [DcsaKind; 3] = [DcsaKind::Rnn, DcsaKind::Gru, DcsaKind::Lstm];

    pub fn name(self) -> &'static str {
        match self {
            DcsaKind::Rnn => "rnn",
            DcsaKind::Gru => "gru",
            DcsaKind::Lstm => "lstm",
        }
    }
}

impl std::fmt::Display for DcsaKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DcsaKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<DcsaKind, ModelError> {
        match s {
            "rnn" => Ok(DcsaKind::Rnn),
            "gru" => Ok(DcsaKind::Gru),
            "lstm" => Ok(DcsaKind::Lstm),
            other => Err(ModelError::InvalidConfig(format!("unknown cell kind {other:?}"))),
        }
    }
}

/// Continuous automaton state. `h` is the exposed state vector; `c` is the
/// LSTM's internal memory, threaded alongside but never classified or
/// aligned against.
#[derive(Debug, Clone, PartialEq)]
pub struct DcsaState {
    pub h: Vec<f64>,
    pub c: Option<Vec<f64>>,
}

/// How the two distillation objectives interleave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternation {
    /// One classification step then one alignment step per sequence.
    PerExample,
    /// All classification steps, then all alignment steps, each epoch.
    PerEpoch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_alternation")]
    pub alternation: Alternation,
}

fn default_epochs() -> usize {
    200
}
fn default_lr() -> f64 {
    1e-3
}
fn default_alpha() -> f64 {
    1.0
}
fn default_alternation() -> Alternation {
    Alternation::PerExample
}

impl Default for DistillConfig {
    fn default() -> DistillConfig {
        DistillConfig {
            epochs: default_epochs(),
            learning_rate: default_lr(),
            alpha: default_alpha(),
            seed: 0,
            alternation: default_alternation(),
        }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.epochs == 0 {
            return Err(ModelError::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ModelError::InvalidConfig("learning rate not positive".into()));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(ModelError::InvalidConfig(format!(
                "alignment weight {} must be nonnegative",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Per-epoch mean losses from distillation. The alignment entries carry
/// the optimized (alpha-scaled) values and stay zero when alpha is 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistillHistory {
    pub classification: Vec<f64>,
    pub alignment: Vec<f64>,
}

/// Deterministic continuous-state automaton: a recurrent cell over the
/// transformer's representation width, with the transformer's classifier
/// bolted on unchanged.
///
/// `trainable` holds the input embedding, cell weights, and learned initial
/// state; `frozen` holds the copied classifier, which no training path
/// touches.
#[derive(Debug, Clone, PartialEq)]
pub struct DcsaModel {
    pub kind: DcsaKind,
    pub alphabet: Alphabet,
    pub state_dim: usize,
    pub seed: u64,
    pub trainable: ParamStore,
    pub frozen: ParamStore,
    pub source_transformer_hash: String,
    pub distill_meta: Option<DistillConfig>,
}

fn cell_param_specs(kind: DcsaKind, vocab: usize, d: usize) -> Vec<(String, usize, usize)> {
    let mut specs = vec![("embed.token".to_string(), vocab, d)];
    let gates: &[&str] = match kind {
        DcsaKind::Rnn => &[""],
        DcsaKind::Gru => &["z", "r", "n"],
        DcsaKind::Lstm => &["i", "f", "g", "o"],
    };
    for gate in gates {
        specs.push((format!("cell.wx{gate}"), d, d));
        specs.push((format!("cell.wh{gate}"), d, d));
        specs.push((format!("cell.b{gate}"), 1, d));
    }
    specs.push(("init.s0".to_string(), 1, d));
    if kind == DcsaKind::Lstm {
        specs.push(("init.c0".to_string(), 1, d));
    }
    specs
}

/// Fresh cell around `transformer`'s embedding and classifier: the token
/// embedding starts as a copy and stays trainable, the classifier is
/// copied and frozen, cell weights are normal(0, 0.02), and the initial
/// state is a trainable zero vector.
pub fn build_dcsa(
    kind: DcsaKind,
    transformer: &TransformerModel,
    seed: u64,
) -> Result<DcsaModel, ModelError> {
    let d = transformer.config.d_model;
    let vocab = transformer.config.vocab_size;
    let mut rng = StreamRng::new(seed, "dcsa-init");
    let mut trainable = ParamStore::new();
    for (name, rows, cols) in cell_param_specs(kind, vocab, d) {
        let tensor = if name == "embed.token" {
            transformer.params.get("embed.token")?.clone()
        } else if name.starts_with("init.") || name.starts_with("cell.b") {
            Tensor::zeros(rows, cols)
        } else {
            let mut data = vec![0.0; rows * cols];
            rng.fill_normal(&mut data, INIT_STD);
            Tensor::new(vec![rows, cols], data)?
        };
        trainable.insert(name, tensor);
    }
    let mut frozen = ParamStore::new();
    frozen.insert("classifier.weight", transformer.params.get("classifier.weight")?.clone());
    frozen.insert("classifier.bias", transformer.params.get("classifier.bias")?.clone());
    Ok(DcsaModel {
        kind,
        alphabet: transformer.alphabet.clone(),
        state_dim: d,
        seed,
        trainable,
        frozen,
        source_transformer_hash: transformer.params_hash(),
        distill_meta: None,
    })
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// out[j] = sum_i x[i] * w[i][j], the row-vector product x . W.
fn vec_mat(x: &[f64], w: &Tensor) -> Vec<f64> {
    let cols = w.cols();
    let mut out = vec![0.0; cols];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        for (o, &wij) in out.iter_mut().zip(w.row_slice(i)) {
            *o += xi * wij;
        }
    }
    out
}

fn gate_raw(
    params: &ParamStore,
    gate: &str,
    x: &[f64],
    h: &[f64],
) -> Result<Vec<f64>, ModelError> {
    let wx = params.get(&format!("cell.wx{gate}"))?;
    let wh = params.get(&format!("cell.wh{gate}"))?;
    let b = params.get(&format!("cell.b{gate}"))?;
    let mut out = vec_mat(x, wx);
    for (o, v) in out.iter_mut().zip(vec_mat(h, wh)) {
        *o += v;
    }
    for (o, &bv) in out.iter_mut().zip(b.data()) {
        *o += bv;
    }
    Ok(out)
}

impl DcsaModel {
    pub fn vocab_size(&self) -> usize {
        self.trainable
            .get("embed.token")
            .map(Tensor::rows)
            .expect("embedding always present")
    }

    /// The learned starting state (with zeroed memory for LSTM cells).
    pub fn initial_state(&self) -> DcsaState {
        let h = self.trainable.get("init.s0").expect("always present").data().to_vec();
        let c = match self.kind {
            DcsaKind::Lstm => {
                Some(self.trainable.get("init.c0").expect("lstm has memory").data().to_vec())
            }
            _ => None,
        };
        DcsaState { h, c }
    }

    fn check_symbol_token(&self, token: usize) -> Result<(), ModelError> {
        if token < SYMBOL_OFFSET || token >= self.vocab_size() {
            return Err(ModelError::TokenFrame(format!(
                "token id {token} is not an alphabet symbol (valid range {}..{})",
                SYMBOL_OFFSET,
                self.vocab_size()
            )));
        }
        Ok(())
    }

    fn check_state(&self, state: &DcsaState) -> Result<(), ModelError> {
        if state.h.len() != self.state_dim {
            return Err(ModelError::InvalidConfig(format!(
                "state width {} does not match model width {}",
                state.h.len(),
                self.state_dim
            )));
        }
        if !state.h.iter().all(|v| v.is_finite()) {
            return Err(ModelError::Diverged("non-finite state vector".into()));
        }
        match (self.kind, &state.c) {
            (DcsaKind::Lstm, Some(c)) if c.len() == self.state_dim => Ok(()),
            (DcsaKind::Lstm, _) => Err(ModelError::InvalidConfig(
                "lstm state is missing its memory vector".into(),
            )),
            (_, Some(_)) => {
                Err(ModelError::InvalidConfig("memory vector on a memoryless cell".into()))
            }
            (_, None) => Ok(()),
        }
    }

    /// One transition on a raw symbol token id.
    pub fn step(&self, state: &DcsaState, token: usize) -> Result<DcsaState, ModelError> {
        self.check_symbol_token(token)?;
        self.check_state(state)?;
        let x = self.trainable.get("embed.token")?.row_slice(token).to_vec();
        let h = &state.h;
        let next = match self.kind {
            DcsaKind::Rnn => {
                let pre = gate_raw(&self.trainable, "", &x, h)?;
                DcsaState { h: pre.into_iter().map(f64::tanh).collect(), c: None }
            }
            DcsaKind::Gru => {
                let z: Vec<f64> =
                    gate_raw(&self.trainable, "z", &x, h)?.into_iter().map(sigmoid).collect();
                let r: Vec<f64> =
                    gate_raw(&self.trainable, "r", &x, h)?.into_iter().map(sigmoid).collect();
                let rh: Vec<f64> = r.iter().zip(h).map(|(ri, hi)| ri * hi).collect();
                let n: Vec<f64> =
                    gate_raw(&self.trainable, "n", &x, &rh)?.into_iter().map(f64::tanh).collect();
                let new_h = z
                    .iter()
                    .zip(&n)
                    .zip(h)
                    .map(|((zi, ni), hi)| zi * ni + (1.0 - zi) * hi)
                    .collect();
                DcsaState { h: new_h, c: None }
            }
            DcsaKind::Lstm => {
                let c = state.c.as_ref().expect("checked above");
                let i: Vec<f64> =
                    gate_raw(&self.trainable, "i", &x, h)?.into_iter().map(sigmoid).collect();
                let f: Vec<f64> =
                    gate_raw(&self.trainable, "f", &x, h)?.into_iter().map(sigmoid).collect();
                let g: Vec<f64> =
                    gate_raw(&self.trainable, "g", &x, h)?.into_iter().map(f64::tanh).collect();
                let o: Vec<f64> =
                    gate_raw(&self.trainable, "o", &x, h)?.into_iter().map(sigmoid).collect();
                let new_c: Vec<f64> = f
                    .iter()
                    .zip(c)
                    .zip(i.iter().zip(&g))
                    .map(|((fi, ci), (ii, gi))| fi * ci + ii * gi)
                    .collect();
                let new_h = o.iter().zip(&new_c).map(|(oi, ci)| oi * ci.tanh()).collect();
                DcsaState { h: new_h, c: Some(new_c) }
            }
        };
        if !next.h.iter().all(|v| v.is_finite()) {
            return Err(ModelError::Diverged("non-finite state after step".into()));
        }
        Ok(next)
    }

    /// Fold `step` over a token sequence from the initial state; the empty
    /// sequence returns the initial state itself.
    pub fn run(&self, tokens: &[usize]) -> Result<DcsaState, ModelError> {
        let mut state = self.initial_state();
        for &t in tokens {
            state = self.step(&state, t)?;
        }
        Ok(state)
    }

    /// `run` on alphabet symbol indices instead of token ids.
    pub fn run_word(&self, symbols: &[usize]) -> Result<DcsaState, ModelError> {
        let tokens = self.tokens_from_symbols(symbols)?;
        self.run(&tokens)
    }

    pub fn tokens_from_symbols(&self, symbols: &[usize]) -> Result<Vec<usize>, ModelError> {
        symbols
            .iter()
            .map(|&s| {
                if s < self.alphabet.len() {
                    Ok(s + SYMBOL_OFFSET)
                } else {
                    Err(ModelError::TokenFrame(format!(
                        "symbol index {s} outside alphabet of {} symbols",
                        self.alphabet.len()
                    )))
                }
            })
            .collect()
    }

    /// Frozen classifier on an arbitrary state. Ties resolve to label 0.
    pub fn classify_state(&self, state: &DcsaState) -> Result<(u8, [f64; 2]), ModelError> {
        self.check_state(state)?;
        let w = self.frozen.get("classifier.weight")?;
        let b = self.frozen.get("classifier.bias")?;
        let logits = vec_mat(&state.h, w);
        Ok(label_from_logits(logits[0] + b.at(0, 0), logits[1] + b.at(0, 1)))
    }

    pub fn classify(&self, tokens: &[usize]) -> Result<(u8, [f64; 2]), ModelError> {
        let state = self.run(tokens)?;
        self.classify_state(&state)
    }

    pub fn classify_word(&self, symbols: &[usize]) -> Result<(u8, [f64; 2]), ModelError> {
        let state = self.run_word(symbols)?;
        self.classify_state(&state)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<DcsaModel, ModelError> {
        DcsaModel::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        let parse = |text: String| -> Result<serde_json::Value, ModelError> {
            serde_json::from_str(&text).map_err(|e| ModelError::BadFile(e.to_string()))
        };
        let file = DcsaFile {
            model_kind: "dcsa".to_string(),
            cell_kind: self.kind,
            alphabet: self.alphabet.clone(),
            state_dim: self.state_dim,
            seed: self.seed,
            source_transformer_hash: self.source_transformer_hash.clone(),
            distill_config: self.distill_meta.clone(),
            trainable: parse(self.trainable.to_json())?,
            frozen: parse(self.frozen.to_json())?,
        };
        serde_json::to_string_pretty(&file).map_err(|e| ModelError::BadFile(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<DcsaModel, ModelError> {
        let file: DcsaFile =
            serde_json::from_str(text).map_err(|e| ModelError::BadFile(e.to_string()))?;
        if file.model_kind != "dcsa" {
            return Err(ModelError::BadFile(format!(
                "model_kind {:?} is not a dcsa",
                file.model_kind
            )));
        }
        let unparse = |v: &serde_json::Value| -> Result<ParamStore, ModelError> {
            let text = serde_json::to_string(v).map_err(|e| ModelError::BadFile(e.to_string()))?;
            Ok(ParamStore::from_json(&text)?)
        };
        let trainable = unparse(&file.trainable)?;
        let frozen = unparse(&file.frozen)?;
        let vocab = file.alphabet.len() + SYMBOL_OFFSET;
        for (name, rows, cols) in cell_param_specs(file.cell_kind, vocab, file.state_dim) {
            let tensor = trainable
                .get(&name)
                .map_err(|_| ModelError::BadFile(format!("missing parameter {name}")))?;
            if tensor.shape() != [rows, cols] {
                return Err(ModelError::BadFile(format!(
                    "parameter {name} has shape {:?}, expected [{rows}, {cols}]",
                    tensor.shape()
                )));
            }
        }
        for (name, rows, cols) in
            [("classifier.weight", file.state_dim, 2), ("classifier.bias", 1, 2)]
        {
            let tensor = frozen
                .get(name)
                .map_err(|_| ModelError::BadFile(format!("missing parameter {name}")))?;
            if tensor.shape() != [rows, cols] {
                return Err(ModelError::BadFile(format!(
                    "parameter {name} has shape {:?}, expected [{rows}, {cols}]",
                    tensor.shape()
                )));
            }
        }
        Ok(DcsaModel {
            kind: file.cell_kind,
            alphabet: file.alphabet,
            state_dim: file.state_dim,
            seed: file.seed,
            trainable,
            frozen,
            source_transformer_hash: file.source_transformer_hash,
            distill_meta: file.distill_config,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct DcsaFile {
    model_kind: String,
    cell_kind: DcsaKind,
    alphabet: Alphabet,
    state_dim: usize,
    seed: u64,
    source_transformer_hash: String,
    distill_config: Option<DistillConfig>,
    trainable: serde_json::Value,
    frozen: serde_json::Value,
}

fn gate_on_tape(
    tape: &mut Tape,
    params: &ParamStore,
    gate: &str,
    x: NodeId,
    h: NodeId,
) -> Result<NodeId, ModelError> {
    let wx = tape.param(params, &format!("cell.wx{gate}"))?;
    let wh = tape.param(params, &format!("cell.wh{gate}"))?;
    let b = tape.param(params, &format!("cell.b{gate}"))?;
    let xa = tape.matmul(x, wx)?;
    let ha = tape.matmul(h, wh)?;
    let s = tape.add(xa, ha)?;
    Ok(tape.add_row(s, b)?)
}

/// One recurrent transition on the tape; mirrors `DcsaModel::step`.
fn step_on_tape(
    tape: &mut Tape,
    params: &ParamStore,
    kind: DcsaKind,
    x: NodeId,
    h: NodeId,
    c: Option<NodeId>,
) -> Result<(NodeId, Option<NodeId>), ModelError> {
    match kind {
        DcsaKind::Rnn => {
            let pre = gate_on_tape(tape, params, "", x, h)?;
            Ok((tape.tanh(pre)?, None))
        }
        DcsaKind::Gru => {
            let z_raw = gate_on_tape(tape, params, "z", x, h)?;
            let z = tape.sigmoid(z_raw)?;
            let r_raw = gate_on_tape(tape, params, "r", x, h)?;
            let r = tape.sigmoid(r_raw)?;
            let rh = tape.mul(r, h)?;
            let n_raw = gate_on_tape(tape, params, "n", x, rh)?;
            let n = tape.tanh(n_raw)?;
            let zn = tape.mul(z, n)?;
            let neg_z = tape.scale(z, -1.0)?;
            let one_minus_z = tape.add_scalar(neg_z, 1.0)?;
            let keep = tape.mul(one_minus_z, h)?;
            Ok((tape.add(zn, keep)?, None))
        }
        DcsaKind::Lstm => {
            let c = c.expect("lstm threads memory");
            let i_raw = gate_on_tape(tape, params, "i", x, h)?;
            let i = tape.sigmoid(i_raw)?;
            let f_raw = gate_on_tape(tape, params, "f", x, h)?;
            let f = tape.sigmoid(f_raw)?;
            let g_raw = gate_on_tape(tape, params, "g", x, h)?;
            let g = tape.tanh(g_raw)?;
            let o_raw = gate_on_tape(tape, params, "o", x, h)?;
            let o = tape.sigmoid(o_raw)?;
            let fc = tape.mul(f, c)?;
            let ig = tape.mul(i, g)?;
            let new_c = tape.add(fc, ig)?;
            let tc = tape.tanh(new_c)?;
            let new_h = tape.mul(o, tc)?;
            Ok((new_h, Some(new_c)))
        }
    }
}

/// Unrolled run on the tape; returns the final exposed state [1, d].
pub(crate) fn run_on_tape(
    tape: &mut Tape,
    params: &ParamStore,
    kind: DcsaKind,
    tokens: &[usize],
) -> Result<NodeId, ModelError> {
    let mut h = tape.param(params, "init.s0")?;
    let mut c = match kind {
        DcsaKind::Lstm => Some(tape.param(params, "init.c0")?),
        _ => None,
    };
    if !tokens.is_empty() {
        let table = tape.param(params, "embed.token")?;
        let embedded = tape.embedding(table, tokens)?;
        for t in 0..tokens.len() {
            let x = tape.slice_rows(embedded, t, t + 1)?;
            let (nh, nc) = step_on_tape(tape, params, kind, x, h, c)?;
            h = nh;
            c = nc;
        }
    }
    Ok(h)
}

struct DistillExample {
    tokens: Vec<usize>,
    teacher_label: usize,
    rep: Tensor,
}

/// Behavior-clone the transformer into the cell: cross-entropy against the
/// transformer's hard labels, alternated with an L1 pull of the final
/// state toward the transformer's representation vector, per the
/// configured schedule. The frozen classifier receives no updates.
pub fn distill(
    dcsa: &mut DcsaModel,
    transformer: &TransformerModel,
    dataset: &SequenceDataset,
    dc: &DistillConfig,
) -> Result<DistillHistory, ModelError> {
    dc.validate()?;
    if dcsa.alphabet != transformer.alphabet || dataset.alphabet() != &dcsa.alphabet {
        return Err(ModelError::AlphabetMismatch(
            "dataset, transformer, and cell must share one alphabet".into(),
        ));
    }
    if dcsa.state_dim != transformer.config.d_model {
        return Err(ModelError::InvalidConfig(format!(
            "state width {} vs representation width {}",
            dcsa.state_dim, transformer.config.d_model
        )));
    }
    for name in ["classifier.weight", "classifier.bias"] {
        if dcsa.frozen.get(name)? != transformer.params.get(name)? {
            return Err(ModelError::InvalidConfig(
                "cell classifier is not a copy of the transformer classifier".into(),
            ));
        }
    }

    let examples: Vec<DistillExample> = dataset
        .split_items(Split::Train)
        .map(|item| {
            let tokens = dcsa.tokens_from_symbols(&item.tokens)?;
            let framed = frame_tokens(&item.tokens, transformer.config.max_symbols())
                .map_err(|e| ModelError::TokenFrame(e.to_string()))?;
            let (teacher_label, _) = transformer.classify(&framed)?;
            let rep = Tensor::row(transformer.rep(&framed)?);
            Ok(DistillExample { tokens, teacher_label: teacher_label as usize, rep })
        })
        .collect::<Result<_, ModelError>>()?;
    if examples.is_empty() {
        return Err(ModelError::InvalidConfig("train split is empty".into()));
    }

    let mut shuffle_rng = StreamRng::new(dc.seed, "distill-shuffle");
    let mut optim = AdamWState::new(&dcsa.trainable);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut history = DistillHistory::default();

    for epoch in 0..dc.epochs {
        shuffle_rng.shuffle(&mut order);
        let mut sum_d = 0.0;
        let mut sum_rep = 0.0;
        let step = |dcsa: &mut DcsaModel,
                        optim: &mut AdamWState,
                        idx: usize,
                        objective: Objective|
         -> Result<f64, ModelError> {
            let ex = &examples[idx];
            let mut tape = Tape::new();
            let h = run_on_tape(&mut tape, &dcsa.trainable, dcsa.kind, &ex.tokens)
                .map_err(|e| diverged(e, epoch, idx))?;
            let loss = match objective {
                Objective::Classification => {
                    let w = tape.constant(dcsa.frozen.get("classifier.weight")?.clone())?;
                    let b = tape.constant(dcsa.frozen.get("classifier.bias")?.clone())?;
                    let wl = tape.matmul(h, w)?;
                    let logits = tape.add_row(wl, b)?;
                    tape.cross_entropy(logits, ex.teacher_label)?
                }
                Objective::Alignment => {
                    let target = tape.constant(ex.rep.clone())?;
                    let diff = tape.sub(h, target)?;
                    let l1 = tape.abs(diff)?;
                    let total = tape.sum(l1)?;
                    tape.scale(total, dc.alpha)?
                }
            };
            let value = tape.item(loss);
            let grads = tape
                .backward(loss, &dcsa.trainable)
                .map_err(|e| diverged(e.into(), epoch, idx))?;
            adamw_step(&mut dcsa.trainable, &grads, optim, dc.learning_rate)
                .map_err(|e| diverged(e.into(), epoch, idx))?;
            Ok(value)
        };
        match dc.alternation {
            Alternation::PerExample => {
                for &idx in &order {
                    sum_d += step(dcsa, &mut optim, idx, Objective::Classification)?;
                    if dc.alpha > 0.0 {
                        sum_rep += step(dcsa, &mut optim, idx, Objective::Alignment)?;
                    }
                }
            }
            Alternation::PerEpoch => {
                for &idx in &order {
                    sum_d += step(dcsa, &mut optim, idx, Objective::Classification)?;
                }
                if dc.alpha > 0.0 {
                    for &idx in &order {
                        sum_rep += step(dcsa, &mut optim, idx, Objective::Alignment)?;
                    }
                }
            }
        }
        history.classification.push(sum_d / examples.len() as f64);
        history.alignment.push(sum_rep / examples.len() as f64);
    }
    dcsa.distill_meta = Some(dc.clone());
    Ok(history)
}

#[derive(Clone, Copy)]
enum Objective {
    Classification,
    Alignment,
}

fn diverged(err: ModelError, epoch: usize, example: usize) -> ModelError {
    ModelError::Diverged(format!("epoch {epoch}, example {example}: {err}"))
}

/// Mean L^p distance between the transformer's representation and the
/// cell's final state over the test split.
pub fn rep_state_diff(
    transformer: &TransformerModel,
    dcsa: &DcsaModel,
    dataset: &SequenceDataset,
    p: u32,
) -> Result<f64, ModelError> {
    if !(p == 1 || p == 2) {
        return Err(ModelError::InvalidConfig(format!("unsupported norm order {p}")));
    }
    if dcsa.state_dim != transformer.config.d_model {
        return Err(ModelError::InvalidConfig("state and representation widths differ".into()));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for item in dataset.split_items(Split::Test) {
        let framed = frame_tokens(&item.tokens, transformer.config.max_symbols())
            .map_err(|e| ModelError::TokenFrame(e.to_string()))?;
        let rep = transformer.rep(&framed)?;
        let state = dcsa.run_word(&item.tokens)?;
        let norm: f64 = match p {
            1 => rep.iter().zip(&state.h).map(|(r, s)| (r - s).abs()).sum(),
            _ => rep
                .iter()
                .zip(&state.h)
                .map(|(r, s)| (r - s) * (r - s))
                .sum::<f64>()
                .sqrt(),
        };
        total += norm;
        count += 1;
    }
    if count == 0 {
        return Err(ModelError::InvalidConfig("evaluation split is empty".into()));
    }
    Ok(total / count as f64)
}
