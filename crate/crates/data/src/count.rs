use crate::DataError;
use dfax_automata::Dfa;

/// Exact string counts per (length, end-label), computed once per DFA by
/// dynamic programming and reused for uniform sampling via unranking.
pub(crate) struct CountTable {
    /// ways[label][len][state]: number of strings of exactly `len` symbols
    /// that lead from `state` to an accepting (label 1) or rejecting
    /// (label 0) state.
    ways: [Vec<Vec<u128>>; 2],
    initial: usize,
}

impl CountTable {
    pub(crate) fn build(dfa: &Dfa, max_len: usize) -> Result<CountTable, DataError> {
        let n = dfa.n_states();
        let n_syms = dfa.alphabet().len();
        let mut ways = [vec![vec![0u128; n]; max_len + 1], vec![vec![0u128; n]; max_len + 1]];
        for s in 0..n {
            let label = usize::from(dfa.is_accepting(s));
            ways[label][0][s] = 1;
        }
        for len in 1..=max_len {
            for label in 0..2 {
                for s in 0..n {
                    let mut total = 0u128;
                    for sym in 0..n_syms {
                        let next = dfa.next_state(s, sym);
                        total = total
                            .checked_add(ways[label][len - 1][next])
                            .ok_or(DataError::Overflow)?;
                    }
                    ways[label][len][s] = total;
                }
            }
        }
        Ok(CountTable { ways, initial: dfa.initial() })
    }

    /// Number of distinct strings of exactly `len` symbols with the label.
    pub(crate) fn count(&self, len: usize, label: u8) -> u128 {
        self.ways[label as usize][len][self.initial]
    }

    /// The `rank`-th string (in lexicographic symbol order) of length `len`
    /// with the given label. `rank` must be below `count(len, label)`.
    pub(crate) fn unrank(&self, dfa: &Dfa, len: usize, label: u8, mut rank: u128) -> Vec<usize> {
        debug_assert!(rank < self.count(len, label));
        let table = &self.ways[label as usize];
        let mut state = self.initial;
        let mut out = Vec::with_capacity(len);
        for remaining in (1..=len).rev() {
            let mut chosen = None;
            for sym in 0..dfa.alphabet().len() {
                let next = dfa.next_state(state, sym);
                let below = table[remaining - 1][next];
                if rank < below {
                    chosen = Some((sym, next));
                    break;
                }
                rank -= below;
            }
            let (sym, next) = chosen.expect("rank below total implies a branch exists");
            out.push(sym);
            state = next;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dfax_automata::Grammar;

    #[test]
    fn counts_match_enumeration() {
        // Strings without "000": brute force versus the DP table.
        let dfa = Grammar::Tomita4.dfa();
        let table = CountTable::build(&dfa, 8).unwrap();
        for len in 0..=8usize {
            let mut expected = [0u128; 2];
            for v in 0..(1u32 << len) {
                let word: Vec<usize> =
                    (0..len).map(|i| ((v >> i) & 1) as usize).collect();
                let label = usize::from(dfa.accepts(&word).unwrap());
                expected[label] += 1;
            }
            assert_eq!(table.count(len, 0), expected[0], "len {len} label 0");
            assert_eq!(table.count(len, 1), expected[1], "len {len} label 1");
        }
    }

    #[test]
    fn unrank_enumerates_each_string_once_in_order() {
        let dfa = Grammar::Mod3.dfa();
        let table = CountTable::build(&dfa, 6).unwrap();
        for label in 0..2u8 {
            for len in 1..=6usize {
                let total = table.count(len, label);
                let mut previous: Option<Vec<usize>> = None;
                for rank in 0..total {
                    let word = table.unrank(&dfa, len, label, rank);
                    assert_eq!(word.len(), len);
                    assert_eq!(dfa.accepts(&word).unwrap(), label == 1);
                    if let Some(prev) = &previous {
                        assert!(*prev < word, "ranks must enumerate in lexicographic order");
                    }
                    previous = Some(word);
                }
            }
        }
    }
}
