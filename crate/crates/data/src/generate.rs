use crate::count::CountTable;
use crate::dataset::{LabeledSequence, SequenceDataset, Split};
use crate::{DataError, DatasetConfig};
use dfax_automata::Dfa;
use dfax_nn::StreamRng;
use std::collections::HashSet;

/// Duplicate redraws within one length cell before picking a fresh length.
const DUP_RETRY_CAP: usize = 100;
/// Length redraws before falling back to a deterministic scan.
const LENGTH_RESAMPLE_CAP: usize = 1000;

/// Sample a balanced labeled dataset for the language of `dfa`.
///
/// Labels alternate positive/negative so the class balance is exact up to
/// integer rounding; strings are drawn uniformly within each (length, label)
/// cell via the counting table, deduplicated, and split into train/test
/// stratified by label. Generation is a pure function of `(dfa, config)`.
pub fn generate_dataset(dfa: &Dfa, config: &DatasetConfig) -> Result<SequenceDataset, DataError> {
    config.validate()?;
    let table = CountTable::build(dfa, config.max_len)?;

    let n_pos = config.size.div_ceil(2);
    let n_neg = config.size / 2;
    check_feasible(&table, config, 1, n_pos)?;
    check_feasible(&table, config, 0, n_neg)?;
    let imbalance = (n_pos as f64 / config.size as f64 - 0.5).abs();
    if imbalance > config.balance_tolerance {
        return Err(DataError::InvalidConfig(format!(
            "odd size {} leaves class imbalance {:.4} above tolerance {}",
            config.size, imbalance, config.balance_tolerance
        )));
    }

    let mut rng = StreamRng::new(config.seed, "dataset");
    let n_lens = config.max_len - config.min_len + 1;
    // taken[label][len - min_len] counts distinct strings already drawn
    // from that cell, so exhausted cells are skipped without re-rolling.
    let mut taken: [Vec<u128>; 2] = [vec![0; n_lens], vec![0; n_lens]];
    let mut seen: HashSet<Vec<usize>> = HashSet::with_capacity(config.size);
    let mut drawn: Vec<(Vec<usize>, u8)> = Vec::with_capacity(config.size);

    for i in 0..config.size {
        let label: u8 = if i % 2 == 0 { 1 } else { 0 };
        let tokens = draw_unseen(dfa, &table, config, label, &mut rng, &mut taken, &mut seen)?;
        seen.insert(tokens.clone());
        taken[label as usize][tokens.len() - config.min_len] += 1;
        drawn.push((tokens, label));
    }

    for (tokens, label) in &drawn {
        if dfa.accepts(tokens)? != (*label == 1) {
            return Err(DataError::Invalid(format!(
                "sampled string {:?} does not match its label {label}",
                dfa.alphabet().render_word(tokens)
            )));
        }
    }

    let splits = stratified_split(&drawn, config);
    let items = drawn
        .into_iter()
        .zip(splits)
        .map(|((tokens, label), split)| LabeledSequence { tokens, label, split })
        .collect();
    SequenceDataset::new(dfa.alphabet().clone(), items, config.clone())
}

fn check_feasible(
    table: &CountTable,
    config: &DatasetConfig,
    label: u8,
    needed: usize,
) -> Result<(), DataError> {
    let mut available: u128 = 0;
    for len in config.min_len..=config.max_len {
        available = available.saturating_add(table.count(len, label));
    }
    if available < needed as u128 {
        return Err(DataError::Infeasible {
            label,
            min_len: config.min_len,
            max_len: config.max_len,
            needed,
            available,
        });
    }
    Ok(())
}

fn draw_unseen(
    dfa: &Dfa,
    table: &CountTable,
    config: &DatasetConfig,
    label: u8,
    rng: &mut StreamRng,
    taken: &mut [Vec<u128>; 2],
    seen: &mut HashSet<Vec<usize>>,
) -> Result<Vec<usize>, DataError> {
    let n_lens = config.max_len - config.min_len + 1;
    for _ in 0..LENGTH_RESAMPLE_CAP {
        let len = config.min_len + rng.below(n_lens);
        let total = table.count(len, label);
        if taken[label as usize][len - config.min_len] >= total {
            continue; // cell exhausted
        }
        for _ in 0..DUP_RETRY_CAP {
            let rank = rng.below_u128(total);
            let tokens = table.unrank(dfa, len, label, rank);
            if !seen.contains(&tokens) {
                return Ok(tokens);
            }
        }
    }
    // Random draws keep colliding; the feasibility check guarantees an
    // unseen string exists, so take the first one in scan order.
    for len in config.min_len..=config.max_len {
        let total = table.count(len, label);
        if taken[label as usize][len - config.min_len] >= total {
            continue;
        }
        for rank in 0..total {
            let tokens = table.unrank(dfa, len, label, rank);
            if !seen.contains(&tokens) {
                return Ok(tokens);
            }
        }
    }
    Err(DataError::Infeasible {
        label,
        min_len: config.min_len,
        max_len: config.max_len,
        needed: 1,
        available: 0,
    })
}

/// Assign train/test per item, reserving `test_fraction` of each label
/// class (at least one item, never the whole class).
fn stratified_split(drawn: &[(Vec<usize>, u8)], config: &DatasetConfig) -> Vec<Split> {
    let mut rng = StreamRng::new(config.seed, "split");
    let mut splits = vec![Split::Train; drawn.len()];
    for label in [1u8, 0u8] {
        let mut indices: Vec<usize> = drawn
            .iter()
            .enumerate()
            .filter(|(_, (_, l))| *l == label)
            .map(|(i, _)| i)
            .collect();
        rng.shuffle(&mut indices);
        let n = indices.len();
        let n_test = ((n as f64 * config.test_fraction).round() as usize).clamp(1, n - 1);
        for &idx in &indices[..n_test] {
            splits[idx] = Split::Test;
        }
    }
    splits
}

#[cfg(test)]
mod tests {
    use super::*;
    use dfax_automata::Grammar;

    /// Chi-square upper critical values at p = 0.001.
    const CHI2_CRIT_DF12: f64 = 32.909;
    const CHI2_CRIT_DF3: f64 = 16.266;

    fn cell_draw_histogram(
        grammar: Grammar,
        len: usize,
        label: u8,
        draws: usize,
    ) -> (Vec<u64>, u128) {
        let dfa = grammar.dfa();
        let table = CountTable::build(&dfa, len).unwrap();
        let total = table.count(len, label);
        let index: std::collections::HashMap<Vec<usize>, usize> = (0..total as usize)
            .map(|r| (table.unrank(&dfa, len, label, r as u128), r))
            .collect();
        let mut rng = StreamRng::new(11, "uniformity");
        let mut hits = vec![0u64; total as usize];
        for _ in 0..draws {
            let rank = rng.below_u128(total);
            let tokens = table.unrank(&dfa, len, label, rank);
            hits[index[&tokens]] += 1;
        }
        (hits, total)
    }

    fn chi2_statistic(hits: &[u64], draws: usize) -> f64 {
        let expected = draws as f64 / hits.len() as f64;
        hits.iter().map(|&h| (h as f64 - expected).powi(2) / expected).sum()
    }

    #[test]
    fn cell_sampling_is_uniform_tomita4_len4() {
        // Length-4 strings without "000": 13 of them, df = 12.
        let (hits, total) = cell_draw_histogram(Grammar::Tomita4, 4, 1, 50_000);
        assert_eq!(total, 13);
        assert!(chi2_statistic(&hits, 50_000) < CHI2_CRIT_DF12);
    }

    #[test]
    fn cell_sampling_is_uniform_mod2_len3() {
        // Length-3 multiples of 2: binary strings ending in 0, df = 3.
        let (hits, total) = cell_draw_histogram(Grammar::Mod2, 3, 1, 20_000);
        assert_eq!(total, 4);
        assert!(chi2_statistic(&hits, 20_000) < CHI2_CRIT_DF3);
    }
}
