use crate::dfa::Dfa;
use crate::{Alphabet, RegexAst};
use std::collections::{BTreeSet, HashMap, VecDeque};

/// Nondeterministic automaton with ε-moves, produced by Thompson's
/// construction. Exactly one accepting state.
pub(crate) struct Nfa {
    alphabet: Alphabet,
    start: usize,
    accept: usize,
    /// Per state: outgoing edges as (symbol index or None for ε, target).
    edges: Vec<Vec<(Option<usize>, usize)>>,
}

impl Nfa {
    fn add_state(&mut self) -> usize {
        self.edges.push(Vec::new());
        self.edges.len() - 1
    }

    fn add_edge(&mut self, from: usize, sym: Option<usize>, to: usize) {
        self.edges[from].push((sym, to));
    }

    /// Fragment of the automaton under construction: entry and exit states.
    fn build(&mut self, ast: &RegexAst) -> (usize, usize) {
        match ast {
            RegexAst::Epsilon => {
                let s = self.add_state();
                let t = self.add_state();
                self.add_edge(s, None, t);
                (s, t)
            }
            RegexAst::Literal(c) => {
                let idx = self
                    .alphabet
                    .index_of(*c)
                    .expect("literals are checked before construction");
                let s = self.add_state();
                let t = self.add_state();
                self.add_edge(s, Some(idx), t);
                (s, t)
            }
            RegexAst::Concat(l, r) => {
                let (ls, lt) = self.build(l);
                let (rs, rt) = self.build(r);
                self.add_edge(lt, None, rs);
                (ls, rt)
            }
            RegexAst::Union(l, r) => {
                let (ls, lt) = self.build(l);
                let (rs, rt) = self.build(r);
                let s = self.add_state();
                let t = self.add_state();
                self.add_edge(s, None, ls);
                self.add_edge(s, None, rs);
                self.add_edge(lt, None, t);
                self.add_edge(rt, None, t);
                (s, t)
            }
            RegexAst::Star(e) => {
                let (es, et) = self.build(e);
                let s = self.add_state();
                let t = self.add_state();
                self.add_edge(s, None, es);
                self.add_edge(s, None, t);
                self.add_edge(et, None, es);
                self.add_edge(et, None, t);
                (s, t)
            }
            RegexAst::Plus(e) => {
                // e+ = e e*
                let once = self.build(e);
                let rest = self.build(&RegexAst::Star(Box::new((**e).clone())));
                self.add_edge(once.1, None, rest.0);
                (once.0, rest.1)
            }
            RegexAst::Optional(e) => {
                let (es, et) = self.build(e);
                let s = self.add_state();
                let t = self.add_state();
                self.add_edge(s, None, es);
                self.add_edge(s, None, t);
                self.add_edge(et, None, t);
                (s, t)
            }
        }
    }

    fn epsilon_closure(&self, set: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut closure = set.clone();
        let mut stack: Vec<usize> = set.iter().copied().collect();
        while let Some(state) = stack.pop() {
            for &(sym, to) in &self.edges[state] {
                if sym.is_none() && closure.insert(to) {
                    stack.push(to);
                }
            }
        }
        closure
    }

    /// Subset construction. States are numbered in breadth-first discovery
    /// order from the closure of the start state, so the result is
    /// deterministic. A transition on every symbol is always present: the
    /// empty subset acts as a (rejecting) sink like any other subset.
    pub(crate) fn determinize(&self) -> Dfa {
        let n_syms = self.alphabet.len();
        let mut ids: HashMap<BTreeSet<usize>, usize> = HashMap::new();
        let mut subsets: Vec<BTreeSet<usize>> = Vec::new();
        let mut delta: Vec<Vec<usize>> = Vec::new();
        let mut queue = VecDeque::new();

        let start = self.epsilon_closure(&BTreeSet::from([self.start]));
        ids.insert(start.clone(), 0);
        subsets.push(start);
        queue.push_back(0);

        while let Some(id) = queue.pop_front() {
            let mut row = Vec::with_capacity(n_syms);
            for sym in 0..n_syms {
                let mut next = BTreeSet::new();
                for &state in &subsets[id] {
                    for &(edge_sym, to) in &self.edges[state] {
                        if edge_sym == Some(sym) {
                            next.insert(to);
                        }
                    }
                }
                let next = self.epsilon_closure(&next);
                let next_id = match ids.get(&next) {
                    Some(&existing) => existing,
                    None => {
                        let fresh = subsets.len();
                        ids.insert(next.clone(), fresh);
                        subsets.push(next);
                        queue.push_back(fresh);
                        fresh
                    }
                };
                row.push(next_id);
            }
            delta.push(row);
        }

        let accepting: Vec<bool> = subsets.iter().map(|s| s.contains(&self.accept)).collect();
        Dfa::new(self.alphabet.clone(), 0, accepting, delta)
            .expect("subset construction yields a well-formed automaton")
    }
}

/// Thompson's construction: one start and one accept state, ε-moves allowed.
pub(crate) fn thompson(ast: &RegexAst, alphabet: &Alphabet) -> Nfa {
    let mut nfa = Nfa {
        alphabet: alphabet.clone(),
        start: 0,
        accept: 0,
        edges: Vec::new(),
    };
    let (start, accept) = nfa.build(ast);
    nfa.start = start;
    nfa.accept = accept;
    nfa
}
