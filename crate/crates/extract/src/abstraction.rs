use std::collections::{HashMap, HashSet, VecDeque};

use dfax_automata::Dfa;
use dfax_model::{DcsaModel, DcsaState};

use crate::error::ExtractError;
use crate::partition::Partition;

/// Finite quotient of a continuous-state model under a partition: abstract
/// states are the reachable cells, each carrying the first continuous state
/// that entered it (breadth-first, symbols in alphabet order) as its
/// representative. Transitions apply one model step to the representative;
/// acceptance applies the frozen classifier to it.
#[derive(Debug, Clone)]
pub struct AbstractAutomaton {
    leaves: Vec<usize>,
    representatives: Vec<DcsaState>,
    accepting: Vec<bool>,
    delta: Vec<Vec<Option<usize>>>,
    incomplete: bool,
}

impl AbstractAutomaton {
    pub fn n_states(&self) -> usize {
        self.leaves.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.delta[0].len()
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn is_accepting(&self, state: usize) -> bool {
        self.accepting[state]
    }

    /// Successor under a symbol, or None where the state budget cut
    /// exploration short.
    pub fn next(&self, state: usize, symbol: usize) -> Option<usize> {
        self.delta[state][symbol]
    }

    pub fn leaf_of(&self, state: usize) -> usize {
        self.leaves[state]
    }

    pub fn representative(&self, state: usize) -> &DcsaState {
        &self.representatives[state]
    }

    /// True when some transition target fell beyond the state budget.
    pub fn incomplete(&self) -> bool {
        self.incomplete
    }
}

/// Breadth-first quotient construction from the model's initial state,
/// discovering at most `max_states` cells.
pub fn build_abstract_automaton(
    dcsa: &DcsaModel,
    partition: &Partition,
    max_states: usize,
) -> Result<AbstractAutomaton, ExtractError> {
    assert!(max_states > 0, "state budget must be positive");
    if partition.dim() != dcsa.state_dim {
        return Err(ExtractError::DimensionMismatch {
            expected: dcsa.state_dim,
            found: partition.dim(),
        });
    }
    let symbols: Vec<usize> = (0..dcsa.alphabet.len()).collect();
    let tokens = dcsa.tokens_from_symbols(&symbols)?;

    let initial = dcsa.initial_state();
    let mut cell_to_state: HashMap<usize, usize> = HashMap::new();
    let mut automaton = AbstractAutomaton {
        leaves: Vec::new(),
        representatives: Vec::new(),
        accepting: Vec::new(),
        delta: Vec::new(),
        incomplete: false,
    };
    let mut queue = VecDeque::new();

    let first_cell = partition.locate(&initial.h)?;
    allocate(&mut automaton, &mut cell_to_state, dcsa, first_cell, initial, tokens.len())?;
    queue.push_back(0usize);

    while let Some(state) = queue.pop_front() {
        for (symbol, &token) in tokens.iter().enumerate() {
            let representative = automaton.representatives[state].clone();
            let successor = dcsa.step(&representative, token)?;
            let cell = partition.locate(&successor.h)?;
            let target = match cell_to_state.get(&cell) {
                Some(&known) => Some(known),
                None if automaton.n_states() < max_states => {
                    let fresh = allocate(
                        &mut automaton,
                        &mut cell_to_state,
                        dcsa,
                        cell,
                        successor,
                        tokens.len(),
                    )?;
                    queue.push_back(fresh);
                    Some(fresh)
                }
                None => {
                    automaton.incomplete = true;
                    None
                }
            };
            automaton.delta[state][symbol] = target;
        }
    }
    Ok(automaton)
}

fn allocate(
    automaton: &mut AbstractAutomaton,
    cell_to_state: &mut HashMap<usize, usize>,
    dcsa: &DcsaModel,
    cell: usize,
    representative: DcsaState,
    n_symbols: usize,
) -> Result<usize, ExtractError> {
    let id = automaton.n_states();
    let (label, _) = dcsa.classify_state(&representative)?;
    automaton.leaves.push(cell);
    automaton.accepting.push(label == 1);
    automaton.representatives.push(representative);
    automaton.delta.push(vec![None; n_symbols]);
    cell_to_state.insert(cell, id);
    Ok(id)
}

/// Shortest word on which the hypothesis and the abstraction disagree about
/// acceptance, exploring symbols in alphabet order so the answer is
/// canonical. Paths through budget-truncated transitions are not searched.
pub fn shortest_disagreement(hypothesis: &Dfa, abstraction: &AbstractAutomaton) -> Option<Vec<usize>> {
    let n_symbols = hypothesis.alphabet().len();
    assert_eq!(n_symbols, abstraction.n_symbols(), "alphabet size mismatch");

    let start = (hypothesis.initial(), abstraction.initial());
    if hypothesis.is_accepting(start.0) != abstraction.is_accepting(start.1) {
        return Some(Vec::new());
    }
    let mut visited: HashSet<(usize, usize)> = HashSet::from([start]);
    let mut parent: HashMap<(usize, usize), ((usize, usize), usize)> = HashMap::new();
    let mut queue = VecDeque::from([start]);

    while let Some(pair) = queue.pop_front() {
        for symbol in 0..n_symbols {
            let Some(abstract_next) = abstraction.next(pair.1, symbol) else {
                continue;
            };
            let next = (hypothesis.next_state(pair.0, symbol), abstract_next);
            if !visited.insert(next) {
                continue;
            }
            parent.insert(next, (pair, symbol));
            if hypothesis.is_accepting(next.0) != abstraction.is_accepting(next.1) {
                let mut word = Vec::new();
                let mut cursor = next;
                while let Some(&(prev, symbol)) = parent.get(&cursor) {
                    word.push(symbol);
                    cursor = prev;
                }
                word.reverse();
                return Some(word);
            }
            queue.push_back(next);
        }
    }
    None
}
