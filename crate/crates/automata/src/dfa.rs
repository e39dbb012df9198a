use crate::{Alphabet, AutomataError};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{HashMap, VecDeque};

const FORMAT_VERSION: u32 = 1;

/// Deterministic finite automaton with a total transition function.
///
/// Sink states are kept explicit rather than implied, so `delta` always has
/// one entry per (state, symbol) pair. Values are immutable after
/// construction; all operations are pure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    alphabet: Alphabet,
    initial: usize,
    accepting: Vec<bool>,
    /// `delta[state][symbol]` in canonical alphabet order.
    delta: Vec<Vec<usize>>,
}

impl Dfa {
    /// Build a DFA, validating shape: at least one state, one transition row
    /// per state with one in-range target per alphabet symbol.
    pub fn new(
        alphabet: Alphabet,
        initial: usize,
        accepting: Vec<bool>,
        delta: Vec<Vec<usize>>,
    ) -> Result<Dfa, AutomataError> {
        let n = delta.len();
        if n == 0 {
            return Err(AutomataError::InvalidDfa("automaton has no states".into()));
        }
        if accepting.len() != n {
            return Err(AutomataError::InvalidDfa(format!(
                "accepting flags for {} states but {} transition rows",
                accepting.len(),
                n
            )));
        }
        if initial >= n {
            return Err(AutomataError::InvalidDfa(format!(
                "initial state {initial} out of range for {n} states"
            )));
        }
        for (state, row) in delta.iter().enumerate() {
            if row.len() != alphabet.len() {
                return Err(AutomataError::InvalidDfa(format!(
                    "state {state} has {} transitions, alphabet has {}",
                    row.len(),
                    alphabet.len()
                )));
            }
            for (sym, &target) in row.iter().enumerate() {
                if target >= n {
                    return Err(AutomataError::InvalidDfa(format!(
                        "transition ({state}, {sym}) targets missing state {target}"
                    )));
                }
            }
        }
        Ok(Dfa { alphabet, initial, accepting, delta })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn n_states(&self) -> usize {
        self.delta.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_accepting(&self, state: usize) -> bool {
        self.accepting[state]
    }

    pub fn next_state(&self, state: usize, symbol: usize) -> usize {
        self.delta[state][symbol]
    }

    /// Final state after consuming `word` (symbol indices) from the initial
    /// state.
    pub fn run(&self, word: &[usize]) -> Result<usize, AutomataError> {
        let mut state = self.initial;
        for &sym in word {
            if sym >= self.alphabet.len() {
                return Err(AutomataError::AlphabetMismatch);
            }
            state = self.delta[state][sym];
        }
        Ok(state)
    }

    pub fn accepts(&self, word: &[usize]) -> Result<bool, AutomataError> {
        Ok(self.accepting[self.run(word)?])
    }

    /// Convenience: membership of a string under the alphabet's symbols.
    pub fn accepts_str(&self, word: &str) -> Result<bool, AutomataError> {
        self.accepts(&self.alphabet.parse_word(word)?)
    }

    /// Language complement: same structure, accepting flags flipped.
    pub fn complement(&self) -> Dfa {
        Dfa {
            alphabet: self.alphabet.clone(),
            initial: self.initial,
            accepting: self.accepting.iter().map(|&a| !a).collect(),
            delta: self.delta.clone(),
        }
    }

    /// States reachable from the initial state, in breadth-first order with
    /// symbols explored in canonical alphabet order.
    fn reachable_order(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n_states()];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(state) = queue.pop_front() {
            order.push(state);
            for &next in &self.delta[state] {
                if !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
        order
    }

    /// Minimal DFA for the same language, in canonical form: states are
    /// renumbered in breadth-first order from the initial state (symbols in
    /// alphabet order), so two minimal automata recognise the same language
    /// iff they are structurally equal.
    pub fn minimize(&self) -> Dfa {
        // Restrict to reachable states first; Hopcroft refines everything
        // it is given, including garbage.
        let reach = self.reachable_order();
        let mut old_to_new = vec![usize::MAX; self.n_states()];
        for (new, &old) in reach.iter().enumerate() {
            old_to_new[old] = new;
        }
        let n = reach.len();
        let n_syms = self.alphabet.len();
        let delta: Vec<Vec<usize>> = reach
            .iter()
            .map(|&old| self.delta[old].iter().map(|&t| old_to_new[t]).collect())
            .collect();
        let accepting: Vec<bool> = reach.iter().map(|&old| self.accepting[old]).collect();
        let initial = old_to_new[self.initial];

        let class = hopcroft(n, n_syms, &accepting, &delta);
        let n_classes = class.iter().copied().max().map_or(0, |m| m + 1);

        // Quotient automaton over the refined partition.
        let mut q_delta = vec![vec![usize::MAX; n_syms]; n_classes];
        let mut q_accepting = vec![false; n_classes];
        for state in 0..n {
            let c = class[state];
            q_accepting[c] = accepting[state];
            for sym in 0..n_syms {
                q_delta[c][sym] = class[delta[state][sym]];
            }
        }

        let quotient = Dfa {
            alphabet: self.alphabet.clone(),
            initial: class[initial],
            accepting: q_accepting,
            delta: q_delta,
        };
        quotient.renumber_canonical()
    }

    /// Renumber states in breadth-first discovery order from the initial
    /// state. Assumes every state is reachable.
    fn renumber_canonical(&self) -> Dfa {
        let order = self.reachable_order();
        debug_assert_eq!(order.len(), self.n_states());
        let mut old_to_new = vec![usize::MAX; self.n_states()];
        for (new, &old) in order.iter().enumerate() {
            old_to_new[old] = new;
        }
        Dfa {
            alphabet: self.alphabet.clone(),
            initial: old_to_new[self.initial],
            accepting: order.iter().map(|&old| self.accepting[old]).collect(),
            delta: order
                .iter()
                .map(|&old| self.delta[old].iter().map(|&t| old_to_new[t]).collect())
                .collect(),
        }
    }

    /// Test language equality. Returns `Ok(None)` when equivalent, otherwise
    /// the shortest word accepted by exactly one automaton; among equally
    /// short witnesses the one earliest in canonical symbol order is chosen.
    pub fn equivalent(&self, other: &Dfa) -> Result<Option<Vec<usize>>, AutomataError> {
        if self.alphabet != other.alphabet {
            return Err(AutomataError::AlphabetMismatch);
        }
        let n_syms = self.alphabet.len();
        // Breadth-first search over the product automaton. Expanding symbols
        // in canonical order makes the first disagreement the canonical
        // shortest counterexample.
        let mut parent: HashMap<(usize, usize), ((usize, usize), usize)> = HashMap::new();
        let start = (self.initial, other.initial);
        let mut queue = VecDeque::from([start]);
        let mut seen = HashMap::new();
        seen.insert(start, ());
        while let Some(pair) = queue.pop_front() {
            if self.accepting[pair.0] != other.accepting[pair.1] {
                let mut word = Vec::new();
                let mut cur = pair;
                while cur != start {
                    let (prev, sym) = parent[&cur];
                    word.push(sym);
                    cur = prev;
                }
                word.reverse();
                return Ok(Some(word));
            }
            for sym in 0..n_syms {
                let next = (self.delta[pair.0][sym], other.delta[pair.1][sym]);
                if seen.insert(next, ()).is_none() {
                    parent.insert(next, (pair, sym));
                    queue.push_back(next);
                }
            }
        }
        Ok(None)
    }
}

/// Hopcroft partition refinement. Returns the class index of every state;
/// class indices are dense but otherwise arbitrary (callers renumber).
fn hopcroft(n: usize, n_syms: usize, accepting: &[bool], delta: &[Vec<usize>]) -> Vec<usize> {
    // Predecessors per symbol, for computing preimages of splitter blocks.
    let mut preimage: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); n]; n_syms];
    for state in 0..n {
        for sym in 0..n_syms {
            preimage[sym][delta[state][sym]].push(state);
        }
    }

    let mut class = vec![0usize; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let acc: Vec<usize> = (0..n).filter(|&s| accepting[s]).collect();
    let rej: Vec<usize> = (0..n).filter(|&s| !accepting[s]).collect();
    for block in [acc, rej] {
        if block.is_empty() {
            continue;
        }
        let id = blocks.len();
        for &s in &block {
            class[s] = id;
        }
        blocks.push(block);
    }

    let mut worklist: VecDeque<usize> = (0..blocks.len()).collect();
    let mut in_worklist = vec![true; blocks.len()];

    while let Some(splitter) = worklist.pop_front() {
        in_worklist[splitter] = false;
        let splitter_states = blocks[splitter].clone();
        for sym in 0..n_syms {
            // X = states moving into the splitter on `sym`.
            let mut touched: Vec<usize> = Vec::new();
            let mut hits: HashMap<usize, Vec<usize>> = HashMap::new();
            for &target in &splitter_states {
                for &src in &preimage[sym][target] {
                    let b = class[src];
                    let entry = hits.entry(b).or_default();
                    if entry.is_empty() {
                        touched.push(b);
                    }
                    entry.push(src);
                }
            }
            for b in touched {
                let inside = hits.remove(&b).expect("touched blocks were recorded");
                if inside.len() == blocks[b].len() {
                    continue; // the whole block maps into the splitter
                }
                // Split block b into (inside X, outside X).
                let mut in_x = Vec::new();
                let mut out_x = Vec::new();
                let marked: std::collections::HashSet<usize> = inside.into_iter().collect();
                for &s in &blocks[b] {
                    if marked.contains(&s) {
                        in_x.push(s);
                    } else {
                        out_x.push(s);
                    }
                }
                let new_id = blocks.len();
                for &s in &in_x {
                    class[s] = new_id;
                }
                blocks[b] = out_x;
                blocks.push(in_x);
                in_worklist.push(false);
                if in_worklist[b] {
                    worklist.push_back(new_id);
                    in_worklist[new_id] = true;
                } else {
                    // Queue the smaller half; either suffices for correctness.
                    let smaller = if blocks[new_id].len() <= blocks[b].len() { new_id } else { b };
                    worklist.push_back(smaller);
                    in_worklist[smaller] = true;
                }
            }
        }
    }
    class
}

#[derive(Serialize, Deserialize)]
struct DfaFile {
    version: u32,
    alphabet: Alphabet,
    n_states: usize,
    initial: usize,
    accepting: Vec<usize>,
    delta: Vec<Vec<usize>>,
}

impl Serialize for Dfa {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let file = DfaFile {
            version: FORMAT_VERSION,
            alphabet: self.alphabet.clone(),
            n_states: self.n_states(),
            initial: self.initial,
            accepting: (0..self.n_states()).filter(|&s| self.accepting[s]).collect(),
            delta: self.delta.clone(),
        };
        file.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Dfa {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Dfa, D::Error> {
        let file = DfaFile::deserialize(deserializer)?;
        if file.version != FORMAT_VERSION {
            return Err(D::Error::custom(format!(
                "unsupported automaton format version {} (expected {FORMAT_VERSION})",
                file.version
            )));
        }
        if file.n_states != file.delta.len() {
            return Err(D::Error::custom(format!(
                "n_states is {} but delta has {} rows",
                file.n_states,
                file.delta.len()
            )));
        }
        let mut accepting = vec![false; file.n_states];
        for s in file.accepting {
            if s >= file.n_states {
                return Err(D::Error::custom(format!("accepting state {s} out of range")));
            }
            accepting[s] = true;
        }
        Dfa::new(file.alphabet, file.initial, accepting, file.delta)
            .map_err(|e| D::Error::custom(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 0*1* over {0,1}: accepts iff no 0 follows a 1.
    fn zeros_then_ones() -> Dfa {
        Dfa::new(
            Alphabet::binary(),
            0,
            vec![true, true, false],
            vec![vec![0, 1], vec![2, 1], vec![2, 2]],
        )
        .unwrap()
    }

    #[test]
    fn validates_shape() {
        let a = Alphabet::binary();
        assert!(matches!(
            Dfa::new(a.clone(), 0, vec![], vec![]),
            Err(AutomataError::InvalidDfa(_))
        ));
        assert!(matches!(
            Dfa::new(a.clone(), 2, vec![true, false], vec![vec![0, 1], vec![1, 0]]),
            Err(AutomataError::InvalidDfa(_))
        ));
        assert!(matches!(
            Dfa::new(a.clone(), 0, vec![true, false], vec![vec![0, 5], vec![1, 0]]),
            Err(AutomataError::InvalidDfa(_))
        ));
        assert!(matches!(
            Dfa::new(a, 0, vec![true], vec![vec![0]]),
            Err(AutomataError::InvalidDfa(_))
        ));
    }

    #[test]
    fn run_and_accept() {
        let d = zeros_then_ones();
        assert!(d.accepts_str("").unwrap());
        assert!(d.accepts_str("0011").unwrap());
        assert!(!d.accepts_str("0110").unwrap());
        assert_eq!(d.run(&[0, 1]).unwrap(), 1);
        assert!(matches!(d.accepts(&[7]), Err(AutomataError::AlphabetMismatch)));
    }

    #[test]
    fn complement_flips_membership() {
        let d = zeros_then_ones();
        let c = d.complement();
        for w in ["", "0", "01", "10", "0101"] {
            assert_ne!(d.accepts_str(w).unwrap(), c.accepts_str(w).unwrap(), "word {w:?}");
        }
    }

    #[test]
    fn minimize_merges_redundant_states() {
        // Two interchangeable accepting states plus an unreachable one.
        let d = Dfa::new(
            Alphabet::binary(),
            0,
            vec![false, true, true, false],
            vec![vec![1, 2], vec![1, 2], vec![1, 2], vec![3, 3]],
        )
        .unwrap();
        let m = d.minimize();
        assert_eq!(m.n_states(), 2);
        assert!(m.equivalent(&d).unwrap().is_none());
    }

    #[test]
    fn minimize_is_canonical() {
        // Same language, different state numbering: minimal forms are equal.
        let d1 = zeros_then_ones();
        let d2 = Dfa::new(
            Alphabet::binary(),
            2,
            vec![false, true, true],
            vec![vec![0, 0], vec![0, 1], vec![2, 1]],
        )
        .unwrap();
        assert_eq!(d2.equivalent(&d1).unwrap(), None);
        assert_eq!(d1.minimize(), d2.minimize());
    }

    #[test]
    fn shortest_counterexample_is_canonical() {
        // Parity of ones vs. always-accept; shortest witness is "1".
        let parity = Dfa::new(
            Alphabet::binary(),
            0,
            vec![true, false],
            vec![vec![0, 1], vec![1, 0]],
        )
        .unwrap();
        let all = Dfa::new(Alphabet::binary(), 0, vec![true], vec![vec![0, 0]]).unwrap();
        assert_eq!(parity.equivalent(&all).unwrap(), Some(vec![1]));
    }

    #[test]
    fn alphabet_mismatch_is_an_error() {
        let d = zeros_then_ones();
        let other = Dfa::new(Alphabet::ab(), 0, vec![true], vec![vec![0, 0]]).unwrap();
        assert!(matches!(d.equivalent(&other), Err(AutomataError::AlphabetMismatch)));
    }

    #[test]
    fn serde_roundtrip_preserves_structure() {
        let d = zeros_then_ones();
        let json = serde_json::to_string(&d).unwrap();
        let back: Dfa = serde_json::from_str(&json).unwrap();
        assert_eq!(d, back);
        assert!(json.contains("\"version\":1"));
    }

    #[test]
    fn deserialize_rejects_bad_version_and_shape() {
        let d = zeros_then_ones();
        let json = serde_json::to_string(&d).unwrap();
        let bumped = json.replace("\"version\":1", "\"version\":9");
        assert!(serde_json::from_str::<Dfa>(&bumped).is_err());
        let truncated = json.replace("\"n_states\":3", "\"n_states\":2");
        assert!(serde_json::from_str::<Dfa>(&truncated).is_err());
    }
}
