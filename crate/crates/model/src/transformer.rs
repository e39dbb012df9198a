use crate::ModelError;
use dfax_automata::Alphabet;
use dfax_data::{frame_tokens, vocab_size, SequenceDataset, Split, CLS_ID, SEP_ID, SYMBOL_OFFSET};
use dfax_nn::{adamw_step, AdamWState, Axis, NodeId, ParamStore, StreamRng, Tape, Tensor};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

/// One sequence per optimizer step.
pub const BATCH_SIZE: usize = 1;

const INIT_STD: f64 = 0.02;

/// Encoder hyperparameters. `vocab_size` of 0 means "derive from the
/// alphabet at build time" so config files can omit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformerConfig {
    #[serde(default = "default_d_model")]
    pub d_model: usize,
    #[serde(default = "default_n_layers")]
    pub n_layers: usize,
    #[serde(default = "default_n_heads")]
    pub n_heads: usize,
    #[serde(default = "default_d_ff")]
    pub d_ff: usize,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[serde(default)]
    pub vocab_size: usize,
}

fn default_d_model() -> usize {
    32
}
fn default_n_layers() -> usize {
    2
}
fn default_n_heads() -> usize {
    4
}
fn default_d_ff() -> usize {
    64
}
fn default_max_len() -> usize {
    64
}

impl Default for TransformerConfig {
    fn default() -> TransformerConfig {
        TransformerConfig {
            d_model: default_d_model(),
            n_layers: default_n_layers(),
            n_heads: default_n_heads(),
            d_ff: default_d_ff(),
            max_len: default_max_len(),
            vocab_size: 0,
        }
    }
}

impl TransformerConfig {
    /// Fill in `vocab_size` for `alphabet` and validate every invariant.
    pub fn resolved(mut self, alphabet: &Alphabet) -> Result<TransformerConfig, ModelError> {
        let expected = vocab_size(alphabet);
        if self.vocab_size == 0 {
            self.vocab_size = expected;
        } else if self.vocab_size != expected {
            return Err(ModelError::InvalidConfig(format!(
                "vocab_size {} but the alphabet needs {expected}",
                self.vocab_size
            )));
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.d_model == 0 || self.n_layers == 0 || self.n_heads == 0 || self.d_ff == 0 {
            return Err(ModelError::InvalidConfig("zero-sized dimension".into()));
        }
        if self.d_model % self.n_heads != 0 {
            return Err(ModelError::InvalidConfig(format!(
                "d_model {} not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if self.max_len < 3 {
            return Err(ModelError::InvalidConfig(format!(
                "max_len {} below the minimum frame of 3 tokens",
                self.max_len
            )));
        }
        if self.vocab_size < 3 {
            return Err(ModelError::InvalidConfig(format!(
                "vocab_size {} leaves no room for alphabet symbols",
                self.vocab_size
            )));
        }
        Ok(())
    }

    /// Longest raw string the model accepts once framed with the two
    /// special tokens.
    pub fn max_symbols(&self) -> usize {
        self.max_len - 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_epochs() -> usize {
    200
}
fn default_lr() -> f64 {
    5e-4
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig { epochs: default_epochs(), learning_rate: default_lr(), seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.epochs == 0 {
            return Err(ModelError::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ModelError::InvalidConfig(format!(
                "learning rate {} not positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Bookkeeping carried in the model file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs_run: usize,
    pub final_mean_loss: Option<f64>,
}

/// Encoder-only binary acceptor: token + position embeddings, post-norm
/// attention blocks, and a two-way linear classifier read from the leading
/// marker position.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformerModel {
    pub config: TransformerConfig,
    pub alphabet: Alphabet,
    pub seed: u64,
    pub params: ParamStore,
    pub training: TrainingMeta,
}

enum Init {
    Normal,
    Zeros,
    Ones,
}

fn param_specs(config: &TransformerConfig) -> Vec<(String, usize, usize, Init)> {
    let d = config.d_model;
    let ff = config.d_ff;
    let mut specs = vec![
        ("embed.token".to_string(), config.vocab_size, d, Init::Normal),
        ("embed.pos".to_string(), config.max_len, d, Init::Normal),
    ];
    for i in 0..config.n_layers {
        for proj in ["wq", "wk", "wv", "wo"] {
            specs.push((format!("block{i}.attn.{proj}"), d, d, Init::Normal));
        }
        for bias in ["bq", "bk", "bv", "bo"] {
            specs.push((format!("block{i}.attn.{bias}"), 1, d, Init::Zeros));
        }
        specs.push((format!("block{i}.ln1.scale"), 1, d, Init::Ones));
        specs.push((format!("block{i}.ln1.shift"), 1, d, Init::Zeros));
        specs.push((format!("block{i}.ffn.w1"), d, ff, Init::Normal));
        specs.push((format!("block{i}.ffn.b1"), 1, ff, Init::Zeros));
        specs.push((format!("block{i}.ffn.w2"), ff, d, Init::Normal));
        specs.push((format!("block{i}.ffn.b2"), 1, d, Init::Zeros));
        specs.push((format!("block{i}.ln2.scale"), 1, d, Init::Ones));
        specs.push((format!("block{i}.ln2.shift"), 1, d, Init::Zeros));
    }
    specs.push(("classifier.weight".to_string(), d, 2, Init::Normal));
    specs.push(("classifier.bias".to_string(), 1, 2, Init::Zeros));
    specs
}

/// Fresh model with normal(0, 0.02) embeddings and projection weights,
/// zero biases, and identity layer norms. Deterministic in `seed`.
pub fn build_transformer(
    config: TransformerConfig,
    alphabet: &Alphabet,
    seed: u64,
) -> Result<TransformerModel, ModelError> {
    let config = config.resolved(alphabet)?;
    let mut rng = StreamRng::new(seed, "transformer-init");
    let mut params = ParamStore::new();
    for (name, rows, cols, init) in param_specs(&config) {
        let mut data = vec![0.0; rows * cols];
        match init {
            Init::Normal => rng.fill_normal(&mut data, INIT_STD),
            Init::Zeros => {}
            Init::Ones => data.fill(1.0),
        }
        params.insert(name, Tensor::new(vec![rows, cols], data)?);
    }
    Ok(TransformerModel {
        config,
        alphabet: alphabet.clone(),
        seed,
        params,
        training: TrainingMeta::default(),
    })
}

fn check_frame(ids: &[usize], config: &TransformerConfig) -> Result<(), ModelError> {
    if ids.len() < 2 {
        return Err(ModelError::TokenFrame(format!(
            "{} tokens cannot hold the two marker tokens",
            ids.len()
        )));
    }
    if ids.len() > config.max_len {
        return Err(ModelError::TokenFrame(format!(
            "{} tokens exceed max_len {}",
            ids.len(),
            config.max_len
        )));
    }
    if ids[0] != CLS_ID || *ids.last().expect("non-empty") != SEP_ID {
        return Err(ModelError::TokenFrame(
            "sequence must start with the classification marker and end with the separator".into(),
        ));
    }
    for &id in &ids[1..ids.len() - 1] {
        if id < SYMBOL_OFFSET || id >= config.vocab_size {
            return Err(ModelError::TokenFrame(format!(
                "interior token id {id} outside symbol range {}..{}",
                SYMBOL_OFFSET, config.vocab_size
            )));
        }
    }
    Ok(())
}

fn layer_norm_affine(
    tape: &mut Tape,
    x: NodeId,
    params: &ParamStore,
    scale: &str,
    shift: &str,
) -> Result<NodeId, ModelError> {
    let normed = tape.layer_norm(x)?;
    let s = tape.param(params, scale)?;
    let b = tape.param(params, shift)?;
    let scaled = tape.mul_row(normed, s)?;
    Ok(tape.add_row(scaled, b)?)
}

/// Full encoder stack on `tape`; returns the [n_tokens, d_model] hidden
/// state after the last block.
fn encode_on_tape(
    tape: &mut Tape,
    params: &ParamStore,
    config: &TransformerConfig,
    ids: &[usize],
) -> Result<NodeId, ModelError> {
    let n = ids.len();
    let d_head = config.d_model / config.n_heads;
    let token_table = tape.param(params, "embed.token")?;
    let pos_table = tape.param(params, "embed.pos")?;
    let tok = tape.embedding(token_table, ids)?;
    let pos = tape.slice_rows(pos_table, 0, n)?;
    let mut x = tape.add(tok, pos)?;

    for i in 0..config.n_layers {
        let wq = tape.param(params, &format!("block{i}.attn.wq"))?;
        let wk = tape.param(params, &format!("block{i}.attn.wk"))?;
        let wv = tape.param(params, &format!("block{i}.attn.wv"))?;
        let wo = tape.param(params, &format!("block{i}.attn.wo"))?;
        let bq = tape.param(params, &format!("block{i}.attn.bq"))?;
        let bk = tape.param(params, &format!("block{i}.attn.bk"))?;
        let bv = tape.param(params, &format!("block{i}.attn.bv"))?;
        let bo = tape.param(params, &format!("block{i}.attn.bo"))?;

        let q = tape.matmul(x, wq)?;
        let q = tape.add_row(q, bq)?;
        let k = tape.matmul(x, wk)?;
        let k = tape.add_row(k, bk)?;
        let v = tape.matmul(x, wv)?;
        let v = tape.add_row(v, bv)?;

        let mut merged: Option<NodeId> = None;
        for h in 0..config.n_heads {
            let lo = h * d_head;
            let hi = lo + d_head;
            let qh = tape.slice_cols(q, lo, hi)?;
            let kh = tape.slice_cols(k, lo, hi)?;
            let vh = tape.slice_cols(v, lo, hi)?;
            let scores = tape.matmul_nt(qh, kh)?;
            let scores = tape.scale(scores, 1.0 / (d_head as f64).sqrt())?;
            let weights = tape.softmax(scores, Axis::Rows)?;
            let ctx = tape.matmul(weights, vh)?;
            merged = Some(match merged {
                None => ctx,
                Some(acc) => tape.concat_cols(acc, ctx)?,
            });
        }
        let ctx = merged.expect("n_heads >= 1");
        let attn = tape.matmul(ctx, wo)?;
        let attn = tape.add_row(attn, bo)?;

        let res1 = tape.add(x, attn)?;
        let ln1 = layer_norm_affine(
            tape,
            res1,
            params,
            &format!("block{i}.ln1.scale"),
            &format!("block{i}.ln1.shift"),
        )?;

        let w1 = tape.param(params, &format!("block{i}.ffn.w1"))?;
        let b1 = tape.param(params, &format!("block{i}.ffn.b1"))?;
        let w2 = tape.param(params, &format!("block{i}.ffn.w2"))?;
        let b2 = tape.param(params, &format!("block{i}.ffn.b2"))?;
        let f = tape.matmul(ln1, w1)?;
        let f = tape.add_row(f, b1)?;
        let f = tape.gelu(f)?;
        let f = tape.matmul(f, w2)?;
        let f = tape.add_row(f, b2)?;

        let res2 = tape.add(ln1, f)?;
        x = layer_norm_affine(
            tape,
            res2,
            params,
            &format!("block{i}.ln2.scale"),
            &format!("block{i}.ln2.shift"),
        )?;
    }
    Ok(x)
}

/// Classifier logits [1, 2] for a framed sequence.
pub(crate) fn logits_on_tape(
    tape: &mut Tape,
    params: &ParamStore,
    config: &TransformerConfig,
    ids: &[usize],
) -> Result<NodeId, ModelError> {
    let hidden = encode_on_tape(tape, params, config, ids)?;
    let lead = tape.slice_rows(hidden, 0, 1)?;
    let w = tape.param(params, "classifier.weight")?;
    let b = tape.param(params, "classifier.bias")?;
    let logits = tape.matmul(lead, w)?;
    Ok(tape.add_row(logits, b)?)
}

impl TransformerModel {
    /// Representation vector: the last block's output at the leading
    /// marker position.
    pub fn rep(&self, ids: &[usize]) -> Result<Vec<f64>, ModelError> {
        check_frame(ids, &self.config)?;
        let mut tape = Tape::new();
        let hidden = encode_on_tape(&mut tape, &self.params, &self.config, ids)?;
        let lead = tape.slice_rows(hidden, 0, 1)?;
        Ok(tape.value(lead).data().to_vec())
    }

    /// Label and softmax confidences. Ties resolve to label 0.
    pub fn classify(&self, ids: &[usize]) -> Result<(u8, [f64; 2]), ModelError> {
        check_frame(ids, &self.config)?;
        let mut tape = Tape::new();
        let logits = logits_on_tape(&mut tape, &self.params, &self.config, ids)?;
        let raw = tape.value(logits);
        Ok(label_from_logits(raw.at(0, 0), raw.at(0, 1)))
    }

    /// Frame a raw symbol-index word and classify it.
    pub fn classify_word(&self, symbols: &[usize]) -> Result<(u8, [f64; 2]), ModelError> {
        let ids = frame_tokens(symbols, self.config.max_symbols())
            .map_err(|e| ModelError::TokenFrame(e.to_string()))?;
        self.classify(&ids)
    }

    /// Content hash of the parameters, for provenance headers.
    pub fn params_hash(&self) -> String {
        let digest = Sha256::digest(self.params.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TransformerModel, ModelError> {
        TransformerModel::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        let params: serde_json::Value = serde_json::from_str(&self.params.to_json())
            .map_err(|e| ModelError::BadFile(e.to_string()))?;
        let file = TransformerFile {
            model_kind: "transformer".to_string(),
            config: self.config.clone(),
            alphabet: self.alphabet.clone(),
            seed: self.seed,
            training_meta: self.training.clone(),
            params,
        };
        serde_json::to_string_pretty(&file).map_err(|e| ModelError::BadFile(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<TransformerModel, ModelError> {
        let file: TransformerFile =
            serde_json::from_str(text).map_err(|e| ModelError::BadFile(e.to_string()))?;
        if file.model_kind != "transformer" {
            return Err(ModelError::BadFile(format!(
                "model_kind {:?} is not a transformer",
                file.model_kind
            )));
        }
        let config = file.config.resolved(&file.alphabet)?;
        let params_text =
            serde_json::to_string(&file.params).map_err(|e| ModelError::BadFile(e.to_string()))?;
        let params = ParamStore::from_json(&params_text)?;
        for (name, rows, cols, _) in param_specs(&config) {
            let tensor = params
                .get(&name)
                .map_err(|_| ModelError::BadFile(format!("missing parameter {name}")))?;
            if tensor.shape() != [rows, cols] {
                return Err(ModelError::BadFile(format!(
                    "parameter {name} has shape {:?}, expected [{rows}, {cols}]",
                    tensor.shape()
                )));
            }
        }
        Ok(TransformerModel {
            config,
            alphabet: file.alphabet,
            seed: file.seed,
            params,
            training: file.training_meta,
        })
    }
}

pub(crate) fn label_from_logits(logit0: f64, logit1: f64) -> (u8, [f64; 2]) {
    let label = u8::from(logit1 > logit0);
    let (p0, p1) = softmax_pair(logit0, logit1);
    (label, [p0, p1])
}

pub(crate) fn softmax_pair(a: f64, b: f64) -> (f64, f64) {
    let m = a.max(b);
    let ea = (a - m).exp();
    let eb = (b - m).exp();
    (ea / (ea + eb), eb / (ea + eb))
}

#[derive(Serialize, Deserialize)]
struct TransformerFile {
    model_kind: String,
    config: TransformerConfig,
    alphabet: Alphabet,
    seed: u64,
    training_meta: TrainingMeta,
    params: serde_json::Value,
}

/// Cross-entropy training over the train split, one sequence per step in a
/// seed-shuffled order. Returns per-epoch mean losses.
pub fn train_transformer(
    model: &mut TransformerModel,
    dataset: &SequenceDataset,
    tc: &TrainConfig,
) -> Result<Vec<f64>, ModelError> {
    tc.validate()?;
    if dataset.alphabet() != &model.alphabet {
        return Err(ModelError::AlphabetMismatch(format!(
            "dataset alphabet {:?} vs model alphabet {:?}",
            dataset.alphabet().symbols(),
            model.alphabet.symbols()
        )));
    }
    let examples: Vec<(Vec<usize>, usize)> = dataset
        .split_items(Split::Train)
        .map(|item| {
            let ids = frame_tokens(&item.tokens, model.config.max_symbols())
                .map_err(|e| ModelError::TokenFrame(e.to_string()))?;
            Ok((ids, item.label as usize))
        })
        .collect::<Result<_, ModelError>>()?;
    if examples.is_empty() {
        return Err(ModelError::InvalidConfig("train split is empty".into()));
    }

    let mut shuffle_rng = StreamRng::new(tc.seed, "transformer-shuffle");
    let mut optim = AdamWState::new(&model.params);
    let mut history = Vec::with_capacity(tc.epochs);
    let mut order: Vec<usize> = (0..examples.len()).collect();

    for epoch in 0..tc.epochs {
        shuffle_rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for &idx in &order {
            let (ids, label) = &examples[idx];
            let mut tape = Tape::new();
            let logits = logits_on_tape(&mut tape, &model.params, &model.config, ids)
                .map_err(|e| diverged(e, epoch, idx))?;
            let loss = tape
                .cross_entropy(logits, *label)
                .map_err(|e| diverged(e.into(), epoch, idx))?;
            epoch_loss += tape.item(loss);
            let grads = tape
                .backward(loss, &model.params)
                .map_err(|e| diverged(e.into(), epoch, idx))?;
            adamw_step(&mut model.params, &grads, &mut optim, tc.learning_rate)
                .map_err(|e| diverged(e.into(), epoch, idx))?;
        }
        history.push(epoch_loss / examples.len() as f64);
    }
    model.training =
        TrainingMeta { epochs_run: tc.epochs, final_mean_loss: history.last().copied() };
    Ok(history)
}

fn diverged(err: ModelError, epoch: usize, example: usize) -> ModelError {
    ModelError::Diverged(format!("epoch {epoch}, example {example}: {err}"))
}
