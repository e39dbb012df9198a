use std::collections::{HashMap, HashSet};

use dfax_automata::{Alphabet, Dfa};

use crate::error::ExtractError;
use crate::lstar::Teacher;

/// Angluin observation table: access prefixes S (with the empty word),
/// distinguishing suffixes E (with the empty word), and membership answers
/// for every word in (S union S*Sigma) concatenated with E.
///
/// Entries are keyed by the full concatenated word, so two cells that denote
/// the same word share one oracle answer by construction.
#[derive(Debug, Clone)]
pub struct ObservationTable {
    n_symbols: usize,
    prefixes: Vec<Vec<usize>>,
    prefix_set: HashSet<Vec<usize>>,
    suffixes: Vec<Vec<usize>>,
    suffix_set: HashSet<Vec<usize>>,
    entries: HashMap<Vec<usize>, bool>,
}

impl ObservationTable {
    pub fn new(n_symbols: usize) -> ObservationTable {
        assert!(n_symbols > 0, "alphabet must be non-empty");
        ObservationTable {
            n_symbols,
            prefixes: vec![Vec::new()],
            prefix_set: HashSet::from([Vec::new()]),
            suffixes: vec![Vec::new()],
            suffix_set: HashSet::from([Vec::new()]),
            entries: HashMap::new(),
        }
    }

    pub fn n_prefixes(&self) -> usize {
        self.prefixes.len()
    }

    pub fn n_suffixes(&self) -> usize {
        self.suffixes.len()
    }

    pub fn n_entries(&self) -> usize {
        self.entries.len()
    }

    /// The cached answer for the empty word, if already queried.
    pub fn empty_word_label(&self) -> Option<bool> {
        self.entries.get(&Vec::new()).copied()
    }

    /// Completes missing answers for the current S and E.
    pub fn fill(&mut self, teacher: &mut dyn Teacher) -> Result<(), ExtractError> {
        let mut words = Vec::new();
        for prefix in self.region_words() {
            for suffix in &self.suffixes {
                let mut word = prefix.clone();
                word.extend_from_slice(suffix);
                if !self.entries.contains_key(&word) {
                    words.push(word);
                }
            }
        }
        words.sort();
        words.dedup();
        for word in words {
            let answer = teacher.member(&word)?;
            self.entries.insert(word, answer);
        }
        Ok(())
    }

    /// S followed by every one-symbol extension of S, in deterministic order.
    fn region_words(&self) -> Vec<Vec<usize>> {
        let mut words = self.prefixes.clone();
        for prefix in &self.prefixes {
            for symbol in 0..self.n_symbols {
                let mut extended = prefix.clone();
                extended.push(symbol);
                words.push(extended);
            }
        }
        words
    }

    fn row(&self, prefix: &[usize]) -> Vec<bool> {
        self.suffixes
            .iter()
            .map(|suffix| {
                let mut word = prefix.to_vec();
                word.extend_from_slice(suffix);
                *self.entries.get(&word).expect("table filled before row access")
            })
            .collect()
    }

    /// First one-symbol extension whose row matches no S row, if any.
    pub fn closedness_defect(&self) -> Option<Vec<usize>> {
        let known: HashSet<Vec<bool>> = self.prefixes.iter().map(|p| self.row(p)).collect();
        for prefix in &self.prefixes {
            for symbol in 0..self.n_symbols {
                let mut extended = prefix.clone();
                extended.push(symbol);
                if !known.contains(&self.row(&extended)) {
                    return Some(extended);
                }
            }
        }
        None
    }

    /// First suffix a*e separating two S prefixes whose rows currently agree.
    pub fn consistency_defect(&self) -> Option<Vec<usize>> {
        for i in 0..self.prefixes.len() {
            for j in i + 1..self.prefixes.len() {
                if self.row(&self.prefixes[i]) != self.row(&self.prefixes[j]) {
                    continue;
                }
                for symbol in 0..self.n_symbols {
                    let mut a = self.prefixes[i].clone();
                    a.push(symbol);
                    let mut b = self.prefixes[j].clone();
                    b.push(symbol);
                    let row_a = self.row(&a);
                    let row_b = self.row(&b);
                    if let Some(at) = (0..row_a.len()).find(|&k| row_a[k] != row_b[k]) {
                        let mut defect = vec![symbol];
                        defect.extend_from_slice(&self.suffixes[at]);
                        return Some(defect);
                    }
                }
            }
        }
        None
    }

    pub fn is_closed(&self) -> bool {
        self.closedness_defect().is_none()
    }

    pub fn is_consistent(&self) -> bool {
        self.consistency_defect().is_none()
    }

    /// Moves a one-symbol extension into S.
    pub fn promote(&mut self, prefix: Vec<usize>) {
        if self.prefix_set.insert(prefix.clone()) {
            self.prefixes.push(prefix);
        }
    }

    pub fn add_suffix(&mut self, suffix: Vec<usize>) {
        if self.suffix_set.insert(suffix.clone()) {
            self.suffixes.push(suffix);
        }
    }

    /// Adds a counterexample and all of its prefixes to S, shortest first.
    pub fn add_counterexample(&mut self, word: &[usize]) {
        for end in 0..=word.len() {
            self.promote(word[..end].to_vec());
        }
    }

    /// Builds the hypothesis automaton: states are the distinct S rows.
    ///
    /// Panics if the table is not closed and consistent; callers establish
    /// both before conjecturing.
    pub fn conjecture(&self, alphabet: &Alphabet) -> Result<Dfa, ExtractError> {
        assert_eq!(alphabet.len(), self.n_symbols, "alphabet mismatch");
        assert!(self.is_closed(), "conjecture from an unclosed table");
        assert!(self.is_consistent(), "conjecture from an inconsistent table");

        let mut row_ids: HashMap<Vec<bool>, usize> = HashMap::new();
        let mut representatives: Vec<&Vec<usize>> = Vec::new();
        for prefix in &self.prefixes {
            let row = self.row(prefix);
            if !row_ids.contains_key(&row) {
                row_ids.insert(row, representatives.len());
                representatives.push(prefix);
            }
        }

        let n_states = representatives.len();
        let mut accepting = vec![false; n_states];
        let mut delta = vec![vec![0usize; self.n_symbols]; n_states];
        for (state, rep) in representatives.iter().enumerate() {
            // Suffix 0 is the empty word, so row[0] is the prefix's own label.
            accepting[state] = self.row(rep)[0];
            for symbol in 0..self.n_symbols {
                let mut extended = (*rep).clone();
                extended.push(symbol);
                delta[state][symbol] =
                    *row_ids.get(&self.row(&extended)).expect("closed table covers successors");
            }
        }
        let initial = *row_ids.get(&self.row(&self.prefixes[0])).expect("empty word is in S");
        Ok(Dfa::new(alphabet.clone(), initial, accepting, delta)?)
    }
}
