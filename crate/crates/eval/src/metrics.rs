//! Agreement metrics between binary sequence classifiers.

use dfax_automata::Dfa;
use dfax_model::{DcsaModel, TransformerModel};

use crate::error::EvalError;

/// A total, deterministic mapping from symbol sequences to {0, 1}.
///
/// The ground-truth language, the transformer, the recurrent clone, and the
/// extracted automaton all implement this, which is what makes their
/// pairwise agreement rates comparable.
pub trait LabelFunction {
    fn label(&self, word: &[usize]) -> Result<u8, EvalError>;
}

impl LabelFunction for Dfa {
    fn label(&self, word: &[usize]) -> Result<u8, EvalError> {
        Ok(u8::from(self.accepts(word)?))
    }
}

impl LabelFunction for TransformerModel {
    fn label(&self, word: &[usize]) -> Result<u8, EvalError> {
        Ok(self.classify_word(word)?.0)
    }
}

impl LabelFunction for DcsaModel {
    fn label(&self, word: &[usize]) -> Result<u8, EvalError> {
        Ok(self.classify_word(word)?.0)
    }
}

/// Labeler that ignores its input; a baseline for sanity checks.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub u8);

impl LabelFunction for Constant {
    fn label(&self, _word: &[usize]) -> Result<u8, EvalError> {
        Ok(self.0)
    }
}

/// Evaluates a label function over a word list.
pub fn labels_of(
    f: &dyn LabelFunction,
    items: &[Vec<usize>],
) -> Result<Vec<u8>, EvalError> {
    items.iter().map(|word| f.label(word)).collect()
}

/// Number of positions where two label vectors agree. Panics on length
/// mismatch: callers must evaluate both functions on the same item list.
pub fn agreement_count(a: &[u8], b: &[u8]) -> usize {
    assert_eq!(a.len(), b.len(), "label vectors cover different item lists");
    a.iter().zip(b).filter(|(x, y)| x == y).count()
}

/// Fraction of items on which two label functions agree.
pub fn consistency(
    a: &dyn LabelFunction,
    b: &dyn LabelFunction,
    items: &[Vec<usize>],
) -> Result<f64, EvalError> {
    if items.is_empty() {
        return Err(EvalError::EmptyItems);
    }
    let la = labels_of(a, items)?;
    let lb = labels_of(b, items)?;
    Ok(agreement_count(&la, &lb) as f64 / items.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dfax_automata::builtin_language;

    fn binary_words(len: usize) -> Vec<Vec<usize>> {
        let mut words = vec![vec![]];
        for _ in 0..len {
            words = words
                .iter()
                .flat_map(|w| {
                    [0, 1].iter().map(move |&s| {
                        let mut e = w.clone();
                        e.push(s);
                        e
                    })
                })
                .collect();
        }
        words
    }

    #[test]
    fn a_function_always_agrees_with_itself() {
        let dfa = builtin_language("tomita4").unwrap();
        let items = binary_words(5);
        assert_eq!(consistency(&dfa, &dfa, &items).unwrap(), 1.0);
    }

    #[test]
    fn complements_never_agree() {
        let dfa = builtin_language("tomita4").unwrap();
        let complement = dfa.complement();
        let items = binary_words(5);
        assert_eq!(consistency(&dfa, &complement, &items).unwrap(), 0.0);
    }

    #[test]
    fn constant_one_versus_no_triple_zero_on_length_three() {
        // Of the 8 length-3 binary strings only "000" is rejected.
        let dfa = builtin_language("tomita4").unwrap();
        let items = binary_words(3);
        assert_eq!(items.len(), 8);
        assert_eq!(consistency(&Constant(1), &dfa, &items).unwrap(), 7.0 / 8.0);
    }

    #[test]
    fn empty_item_list_is_an_error() {
        let dfa = builtin_language("tomita1").unwrap();
        assert!(matches!(
            consistency(&dfa, &dfa, &[]),
            Err(EvalError::EmptyItems)
        ));
    }

    #[test]
    fn agreement_counts_are_exact() {
        assert_eq!(agreement_count(&[0, 1, 1, 0], &[0, 0, 1, 1]), 2);
        assert_eq!(agreement_count(&[], &[]), 0);
    }
}
