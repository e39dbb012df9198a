use std::time::Instant;

use dfax_automata::{Alphabet, Dfa};

use crate::error::ExtractError;
use crate::table::ObservationTable;

/// A minimally adequate teacher: answers membership queries and judges
/// hypothesis automata, returning a word the hypothesis misclassifies
/// relative to the teacher's own notion of the target, or None to accept.
pub trait Teacher {
    fn alphabet(&self) -> &Alphabet;
    fn member(&mut self, word: &[usize]) -> Result<bool, ExtractError>;
    fn equivalence(&mut self, hypothesis: &Dfa) -> Result<Option<Vec<usize>>, ExtractError>;
}

/// Teacher backed by a ground-truth automaton. Equivalence is decided
/// exactly, with the shortest counterexample on failure.
#[derive(Debug, Clone)]
pub struct ExactTeacher {
    target: Dfa,
    membership_queries: usize,
    equivalence_queries: usize,
}

impl ExactTeacher {
    pub fn new(target: Dfa) -> ExactTeacher {
        ExactTeacher { target, membership_queries: 0, equivalence_queries: 0 }
    }

    pub fn target(&self) -> &Dfa {
        &self.target
    }

    pub fn membership_queries(&self) -> usize {
        self.membership_queries
    }

    pub fn equivalence_queries(&self) -> usize {
        self.equivalence_queries
    }
}

impl Teacher for ExactTeacher {
    fn alphabet(&self) -> &Alphabet {
        self.target.alphabet()
    }

    fn member(&mut self, word: &[usize]) -> Result<bool, ExtractError> {
        self.membership_queries += 1;
        Ok(self.target.accepts(word)?)
    }

    fn equivalence(&mut self, hypothesis: &Dfa) -> Result<Option<Vec<usize>>, ExtractError> {
        self.equivalence_queries += 1;
        Ok(self.target.equivalent(hypothesis)?)
    }
}

/// Result of a learning run. `incomplete` marks a budget stop: the
/// hypothesis is the best conjecture so far, not a teacher-accepted one.
#[derive(Debug, Clone)]
pub struct LstarOutcome {
    pub dfa: Dfa,
    pub incomplete: bool,
    pub equivalence_rounds: usize,
    pub counterexamples: Vec<Vec<usize>>,
}

/// Angluin's algorithm: repair the table until closed and consistent,
/// conjecture, and ask the teacher; counterexamples land in S together
/// with all their prefixes. Stops early when the hypothesis outgrows
/// `max_states` or `deadline` passes.
pub fn lstar(
    teacher: &mut dyn Teacher,
    max_states: usize,
    deadline: Option<Instant>,
) -> Result<LstarOutcome, ExtractError> {
    assert!(max_states > 0, "state budget must be positive");
    let alphabet = teacher.alphabet().clone();
    let mut table = ObservationTable::new(alphabet.len());
    table.fill(teacher)?;
    let mut counterexamples: Vec<Vec<usize>> = Vec::new();
    let mut rounds = 0usize;
    // Safety net for teachers that keep producing fresh counterexamples
    // without the hypothesis converging (a non-regular target).
    let round_cap = 4 * max_states + 16;

    loop {
        loop {
            if past(deadline) {
                return stop_early(&table, &alphabet, rounds, counterexamples);
            }
            if let Some(extension) = table.closedness_defect() {
                table.promote(extension);
                table.fill(teacher)?;
            } else if let Some(suffix) = table.consistency_defect() {
                table.add_suffix(suffix);
                table.fill(teacher)?;
            } else {
                break;
            }
        }

        assert!(table.is_closed() && table.is_consistent(), "repair loop left a defect");
        let hypothesis = table.conjecture(&alphabet)?;
        if hypothesis.n_states() > max_states || past(deadline) || rounds >= round_cap {
            return Ok(LstarOutcome {
                dfa: hypothesis,
                incomplete: true,
                equivalence_rounds: rounds,
                counterexamples,
            });
        }

        rounds += 1;
        match teacher.equivalence(&hypothesis)? {
            None => {
                return Ok(LstarOutcome {
                    dfa: hypothesis,
                    incomplete: false,
                    equivalence_rounds: rounds,
                    counterexamples,
                });
            }
            Some(word) => {
                counterexamples.push(word.clone());
                table.add_counterexample(&word);
                table.fill(teacher)?;
            }
        }
    }
}

fn past(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

fn stop_early(
    table: &ObservationTable,
    alphabet: &Alphabet,
    rounds: usize,
    counterexamples: Vec<Vec<usize>>,
) -> Result<LstarOutcome, ExtractError> {
    // The table may hold defects mid-repair; a single-state hypothesis from
    // the empty word's label is always available as a last resort.
    let dfa = if table.is_closed() && table.is_consistent() {
        table.conjecture(alphabet)?
    } else {
        let accepting = vec![table.empty_word_label().unwrap_or(false)];
        let delta = vec![vec![0; alphabet.len()]];
        Dfa::new(alphabet.clone(), 0, accepting, delta)?
    };
    Ok(LstarOutcome { dfa, incomplete: true, equivalence_rounds: rounds, counterexamples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use dfax_automata::builtin_language;

    #[test]
    fn accept_all_language_is_one_state() {
        let alphabet = Alphabet::binary();
        let target =
            Dfa::new(alphabet.clone(), 0, vec![true], vec![vec![0, 0]]).unwrap();
        let mut teacher = ExactTeacher::new(target.clone());
        let outcome = lstar(&mut teacher, 8, None).unwrap();
        assert!(!outcome.incomplete);
        assert_eq!(outcome.dfa.n_states(), 1);
        assert!(outcome.dfa.is_accepting(outcome.dfa.initial()));
        assert_eq!(outcome.dfa.equivalent(&target).unwrap(), None);
        assert_eq!(outcome.equivalence_rounds, 1);
    }

    #[test]
    fn four_state_target_is_recovered_exactly() {
        let target = builtin_language("tomita4").unwrap();
        let mut teacher = ExactTeacher::new(target.clone());
        let outcome = lstar(&mut teacher, 16, None).unwrap();
        assert!(!outcome.incomplete);
        assert_eq!(outcome.dfa.n_states(), target.n_states());
        assert_eq!(outcome.dfa.equivalent(&target).unwrap(), None);
        assert!(outcome.equivalence_rounds <= target.n_states());
    }

    #[test]
    fn tight_state_budget_reports_incomplete() {
        let target = builtin_language("tomita5").unwrap();
        let mut teacher = ExactTeacher::new(target);
        let outcome = lstar(&mut teacher, 1, None).unwrap();
        assert!(outcome.incomplete);
        assert!(outcome.dfa.n_states() >= 1);
    }

    #[test]
    fn expired_deadline_still_returns_a_hypothesis() {
        let target = builtin_language("tomita6").unwrap();
        let mut teacher = ExactTeacher::new(target);
        let deadline = Instant::now();
        let outcome = lstar(&mut teacher, 64, Some(deadline)).unwrap();
        assert!(outcome.incomplete);
        assert!(outcome.dfa.n_states() >= 1);
    }
}
