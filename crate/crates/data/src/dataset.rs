use crate::{DataError, DatasetConfig};
use dfax_automata::Alphabet;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashSet;
use std::fmt;
use std::path::Path;

const FORMAT_VERSION: u32 = 1;

/// Which half of the evaluation protocol an item belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// One labeled string: symbol indices into the dataset alphabet plus the
/// language membership bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSequence {
    pub tokens: Vec<usize>,
    pub label: u8,
    pub split: Split,
}

/// Immutable labeled dataset with a train/test split.
///
/// Invariants, enforced at construction and on load: labels are 0/1, no
/// duplicate token sequences, positives within `balance_tolerance` of half,
/// both splits non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDataset {
    alphabet: Alphabet,
    items: Vec<LabeledSequence>,
    config: DatasetConfig,
}

impl SequenceDataset {
    pub(crate) fn new(
        alphabet: Alphabet,
        items: Vec<LabeledSequence>,
        config: DatasetConfig,
    ) -> Result<SequenceDataset, DataError> {
        let ds = SequenceDataset { alphabet, items, config };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<(), DataError> {
        let n = self.items.len();
        if n == 0 {
            return Err(DataError::Invalid("dataset is empty".into()));
        }
        let mut seen: HashSet<&[usize]> = HashSet::with_capacity(n);
        let mut positives = 0usize;
        let mut split_counts = [0usize; 2];
        for item in &self.items {
            if item.label > 1 {
                return Err(DataError::Invalid(format!("label {} outside {{0,1}}", item.label)));
            }
            if item.tokens.is_empty() {
                return Err(DataError::Invalid("empty token sequence".into()));
            }
            if let Some(&bad) = item.tokens.iter().find(|&&t| t >= self.alphabet.len()) {
                return Err(DataError::Invalid(format!(
                    "token index {bad} outside alphabet of {} symbols",
                    self.alphabet.len()
                )));
            }
            if !seen.insert(&item.tokens) {
                return Err(DataError::Invalid(format!(
                    "duplicate sequence {:?}",
                    self.alphabet.render_word(&item.tokens)
                )));
            }
            positives += usize::from(item.label == 1);
            split_counts[usize::from(item.split == Split::Test)] += 1;
        }
        let imbalance = (positives as f64 / n as f64 - 0.5).abs();
        if imbalance > self.config.balance_tolerance + 1e-12 {
            return Err(DataError::Invalid(format!(
                "{positives} positives in {n} items is off balance by {imbalance:.4}"
            )));
        }
        if split_counts[0] == 0 || split_counts[1] == 0 {
            return Err(DataError::Invalid("a split is empty".into()));
        }
        Ok(())
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn config(&self) -> &DatasetConfig {
        &self.config
    }

    pub fn items(&self) -> &[LabeledSequence] {
        &self.items
    }

    pub fn split_items(&self, split: Split) -> impl Iterator<Item = &LabeledSequence> {
        self.items.iter().filter(move |item| item.split == split)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Serialize to the JSON-lines format: a header line followed by one
    /// line per item, LF endings, with an integrity checksum in the header.
    pub fn to_jsonl(&self) -> String {
        let mut body = String::new();
        for item in &self.items {
            let line = ItemLine {
                tokens: self.alphabet.render_word(&item.tokens),
                label: item.label,
                split: item.split,
            };
            body.push_str(&serde_json::to_string(&line).expect("items serialize"));
            body.push('\n');
        }
        let header = Header {
            version: FORMAT_VERSION,
            alphabet: self.alphabet.clone(),
            seed: self.config.seed,
            checksum: hex_sha256(&body),
            config: self.config.clone(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        out.push_str(&body);
        out
    }

    /// Parse the JSON-lines format, verifying the checksum and every
    /// dataset invariant.
    pub fn from_jsonl(text: &str) -> Result<SequenceDataset, DataError> {
        let Some((header_line, body)) = text.split_once('\n') else {
            return Err(DataError::Malformed("missing header line".into()));
        };
        let header: Header = serde_json::from_str(header_line)
            .map_err(|e| DataError::Malformed(format!("header: {e}")))?;
        if header.version != FORMAT_VERSION {
            return Err(DataError::Malformed(format!(
                "unsupported dataset format version {} (expected {FORMAT_VERSION})",
                header.version
            )));
        }
        let computed = hex_sha256(body);
        if computed != header.checksum {
            return Err(DataError::ChecksumMismatch { stored: header.checksum, computed });
        }
        if header.seed != header.config.seed {
            return Err(DataError::Malformed(format!(
                "header seed {} disagrees with config seed {}",
                header.seed, header.config.seed
            )));
        }
        let mut items = Vec::new();
        for (idx, line) in body.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let parsed: ItemLine = serde_json::from_str(line)
                .map_err(|e| DataError::Malformed(format!("item {}: {e}", idx + 1)))?;
            let tokens = header
                .alphabet
                .parse_word(&parsed.tokens)
                .map_err(|e| DataError::Malformed(format!("item {}: {e}", idx + 1)))?;
            items.push(LabeledSequence { tokens, label: parsed.label, split: parsed.split });
        }
        SequenceDataset::new(header.alphabet, items, header.config)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        Ok(std::fs::write(path, self.to_jsonl())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SequenceDataset, DataError> {
        SequenceDataset::from_jsonl(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    alphabet: Alphabet,
    seed: u64,
    checksum: String,
    config: DatasetConfig,
}

#[derive(Serialize, Deserialize)]
struct ItemLine {
    tokens: String,
    label: u8,
    split: Split,
}

fn hex_sha256(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
