use crate::AutomataError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Characters that can never be alphabet symbols: regex metacharacters and
/// the epsilon sign. Multi-character specials like `[CLS]`/`[SEP]` are ruled
/// out by the single-character constraint itself.
const RESERVED: &[char] = &['(', ')', '|', '*', '+', '?', 'ε'];

/// An ordered set of distinct single-character input symbols.
///
/// The order is canonical and fixed: it defines the column order of every
/// transition table, token-id assignment and DOT edge label derived from it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Result<Self, AutomataError> {
        let symbols: Vec<char> = symbols.into_iter().collect();
        if symbols.is_empty() {
            return Err(AutomataError::InvalidAlphabet("no symbols".into()));
        }
        for (i, &c) in symbols.iter().enumerate() {
            if RESERVED.contains(&c) || c.is_whitespace() || c.is_control() {
                return Err(AutomataError::InvalidAlphabet(format!(
                    "'{}' is reserved and cannot be a symbol",
                    c.escape_default()
                )));
            }
            if symbols[..i].contains(&c) {
                return Err(AutomataError::InvalidAlphabet(format!("duplicate symbol '{c}'")));
            }
        }
        Ok(Self { symbols })
    }

    /// Parse from a compact string, one symbol per character (e.g. `"01"`).
    pub fn from_str_symbols(s: &str) -> Result<Self, AutomataError> {
        Self::new(s.chars())
    }

    /// The `{0,1}` alphabet used by most benchmark grammars.
    pub fn binary() -> Self {
        Self::new(['0', '1']).expect("static alphabet")
    }

    /// The `{a,b}` alphabet.
    pub fn ab() -> Self {
        Self::new(['a', 'b']).expect("static alphabet")
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn symbol(&self, index: usize) -> char {
        self.symbols[index]
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.symbols.iter().position(|&s| s == c)
    }

    /// Map a word to symbol indices, rejecting characters outside the alphabet.
    pub fn parse_word(&self, word: &str) -> Result<Vec<usize>, AutomataError> {
        word.chars()
            .map(|c| self.index_of(c).ok_or(AutomataError::UnknownSymbol(c)))
            .collect()
    }

    /// Render symbol indices back into a string.
    pub fn render_word(&self, indices: &[usize]) -> String {
        indices.iter().map(|&i| self.symbols[i]).collect()
    }
}

impl Serialize for Alphabet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let strings: Vec<String> = self.symbols.iter().map(|c| c.to_string()).collect();
        strings.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Alphabet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let strings: Vec<String> = Vec::deserialize(deserializer)?;
        let mut chars = Vec::with_capacity(strings.len());
        for s in &strings {
            let mut it = s.chars();
            match (it.next(), it.next()) {
                (Some(c), None) => chars.push(c),
                _ => {
                    return Err(serde::de::Error::custom(format!(
                        "alphabet entries must be single characters, got {s:?}"
                    )))
                }
            }
        }
        Alphabet::new(chars).map_err(serde::de::Error::custom)
    }
}
