use std::collections::HashMap;

use dfax_automata::{Alphabet, Dfa};
use dfax_model::DcsaModel;
use dfax_nn::StreamRng;

use crate::abstraction::{build_abstract_automaton, shortest_disagreement, AbstractAutomaton};
use crate::budget::ExtractionBudget;
use crate::error::ExtractError;
use crate::lstar::Teacher;
use crate::partition::Partition;

/// Query counters, exposed for the extraction log.
#[derive(Debug, Clone, Default)]
pub struct TeacherStats {
    /// Membership calls, cache hits included.
    pub membership_queries: usize,
    pub cache_hits: usize,
    pub equivalence_rounds: usize,
    pub refinements: usize,
}

/// Teacher backed by a frozen recurrent model. Membership is the model's
/// own label, memoized. Equivalence abstracts the model's state space
/// through a refinable partition rooted at the classifier's decision
/// boundary, arbitrates every abstraction disagreement against the model
/// itself, and finishes with a random-probe sweep before accepting.
pub struct DcsaTeacher<'a> {
    dcsa: &'a DcsaModel,
    partition: Partition,
    budget: ExtractionBudget,
    probe_max_len: usize,
    rng: StreamRng,
    cache: HashMap<Vec<usize>, bool>,
    stats: TeacherStats,
    refinement_warning: bool,
}

impl<'a> DcsaTeacher<'a> {
    pub fn new(
        dcsa: &'a DcsaModel,
        budget: ExtractionBudget,
        probe_max_len: usize,
        seed: u64,
    ) -> Result<DcsaTeacher<'a>, ExtractError> {
        budget.validate()?;
        if probe_max_len == 0 {
            return Err(ExtractError::InvalidConfig("probe_max_len must be positive".into()));
        }
        let partition = Partition::from_classifier(
            dcsa.frozen.get("classifier.weight")?,
            dcsa.frozen.get("classifier.bias")?,
        )?;
        Ok(DcsaTeacher {
            dcsa,
            partition,
            budget,
            probe_max_len,
            rng: StreamRng::new(seed, "extraction-probes"),
            cache: HashMap::new(),
            stats: TeacherStats::default(),
            refinement_warning: false,
        })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn stats(&self) -> &TeacherStats {
        &self.stats
    }

    /// True once a needed refinement was impossible or over budget; the
    /// teacher then leans on random probing alone.
    pub fn refinement_warning(&self) -> bool {
        self.refinement_warning
    }

    /// Re-evaluates up to `limit` cached answers against the model.
    pub fn verify_cache(&self, limit: usize) -> Result<bool, ExtractError> {
        for (word, &label) in self.cache.iter().take(limit) {
            let (fresh, _) = self.dcsa.classify_word(word)?;
            if (fresh == 1) != label {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Walks `word` through both the model and the abstraction that claimed
    /// a wrong label for it, and splits the first cell whose successor cell
    /// diverges from the claim.
    fn refine_along(
        &mut self,
        word: &[usize],
        abstraction: &AbstractAutomaton,
    ) -> Result<(), ExtractError> {
        let tokens = self.dcsa.tokens_from_symbols(word)?;
        let mut real = self.dcsa.initial_state();
        let mut abstract_state = abstraction.initial();
        for (&symbol, &token) in word.iter().zip(&tokens) {
            let real_next = self.dcsa.step(&real, token)?;
            let real_cell = self.partition.locate(&real_next.h)?;
            let claimed = abstraction.next(abstract_state, symbol).ok_or_else(|| {
                ExtractError::CannotSplit {
                    cell: abstraction.leaf_of(abstract_state),
                    reason: "trajectory leaves the explored abstraction".into(),
                }
            })?;
            if real_cell != abstraction.leaf_of(claimed) {
                let cell = abstraction.leaf_of(abstract_state);
                let representative = abstraction.representative(abstract_state).h.clone();
                self.partition.refine(cell, &real.h, &representative)?;
                return Ok(());
            }
            real = real_next;
            abstract_state = claimed;
        }
        // Same cells all the way means same root side at the end, and the
        // root is the classifier boundary, so the labels cannot differ.
        Err(ExtractError::CannotSplit {
            cell: abstraction.leaf_of(abstract_state),
            reason: "trajectory matches the abstraction cell for cell".into(),
        })
    }
}

impl Teacher for DcsaTeacher<'_> {
    fn alphabet(&self) -> &Alphabet {
        &self.dcsa.alphabet
    }

    fn member(&mut self, word: &[usize]) -> Result<bool, ExtractError> {
        self.stats.membership_queries += 1;
        if let Some(&label) = self.cache.get(word) {
            self.stats.cache_hits += 1;
            return Ok(label);
        }
        let (label, _) = self.dcsa.classify_word(word)?;
        let accepted = label == 1;
        self.cache.insert(word.to_vec(), accepted);
        Ok(accepted)
    }

    fn equivalence(&mut self, hypothesis: &Dfa) -> Result<Option<Vec<usize>>, ExtractError> {
        self.stats.equivalence_rounds += 1;
        loop {
            let abstraction = build_abstract_automaton(
                self.dcsa,
                &self.partition,
                self.budget.max_abstract_states,
            )?;
            let Some(word) = shortest_disagreement(hypothesis, &abstraction) else {
                break;
            };
            if self.member(&word)? != hypothesis.accepts(&word)? {
                return Ok(Some(word));
            }
            // The hypothesis matches the model here; the abstraction is at
            // fault and must be refined before it can veto anything.
            if self.stats.refinements >= self.budget.max_refinements {
                self.refinement_warning = true;
                break;
            }
            match self.refine_along(&word, &abstraction) {
                Ok(()) => self.stats.refinements += 1,
                Err(ExtractError::CannotSplit { .. }) => {
                    self.refinement_warning = true;
                    break;
                }
                Err(other) => return Err(other),
            }
        }

        let n_symbols = self.dcsa.alphabet.len();
        for _ in 0..self.budget.random_probe_count {
            let length = self.rng.below(2 * self.probe_max_len + 1);
            let word: Vec<usize> = (0..length).map(|_| self.rng.below(n_symbols)).collect();
            if self.member(&word)? != hypothesis.accepts(&word)? {
                return Ok(Some(word));
            }
        }
        Ok(None)
    }
}
