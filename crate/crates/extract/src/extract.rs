use std::time::{Duration, Instant};

use dfax_automata::Dfa;
use dfax_model::DcsaModel;
use serde::{Deserialize, Serialize};

use crate::budget::ExtractionBudget;
use crate::error::ExtractError;
use crate::lstar::lstar;
use crate::teacher::DcsaTeacher;

/// Counters and outcome flags for one extraction run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractionLog {
    pub membership_queries: usize,
    pub cache_hits: usize,
    pub equivalence_rounds: usize,
    pub refinements: usize,
    pub final_leaf_count: usize,
    /// Conjecture size before minimization; gauges how much structure the
    /// learner saw, as opposed to how much survives.
    pub hypothesis_states: usize,
    /// Counterexamples in submission order, rendered as strings.
    pub counterexamples: Vec<String>,
    pub wall_seconds: f64,
    /// True when a state or wall-clock budget stopped the learner early.
    pub incomplete: bool,
}

/// A learned automaton together with its log. `refinement_warning` marks a
/// run whose abstraction could not be refined far enough and fell back to
/// random probing before accepting.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub dfa: Dfa,
    pub log: ExtractionLog,
    pub refinement_warning: bool,
}

/// Learns a minimized DFA mirroring the model's acceptance behavior.
///
/// The learner asks the model itself for memberships and judges hypotheses
/// against a partition-based abstraction of the model's state space,
/// starting from the frozen classifier's decision split and refining on
/// demand. `probe_max_len` caps random probe words at twice the length the
/// model was trained on; `seed` fixes the probe stream.
pub fn extract_dfa_from_dcsa(
    dcsa: &DcsaModel,
    budget: &ExtractionBudget,
    probe_max_len: usize,
    seed: u64,
) -> Result<Extraction, ExtractError> {
    let start = Instant::now();
    let mut teacher = DcsaTeacher::new(dcsa, budget.clone(), probe_max_len, seed)?;
    let deadline = start + Duration::from_secs(budget.wall_clock_seconds);
    let outcome = lstar(&mut teacher, budget.max_hypothesis_states, Some(deadline))?;
    let hypothesis_states = outcome.dfa.n_states();
    let dfa = outcome.dfa.minimize();
    let stats = teacher.stats();
    let log = ExtractionLog {
        membership_queries: stats.membership_queries,
        cache_hits: stats.cache_hits,
        equivalence_rounds: stats.equivalence_rounds,
        refinements: stats.refinements,
        final_leaf_count: teacher.partition().n_leaves(),
        hypothesis_states,
        counterexamples: outcome
            .counterexamples
            .iter()
            .map(|word| dcsa.alphabet.render_word(word))
            .collect(),
        wall_seconds: start.elapsed().as_secs_f64(),
        incomplete: outcome.incomplete,
    };
    Ok(Extraction { dfa, log, refinement_warning: teacher.refinement_warning() })
}
