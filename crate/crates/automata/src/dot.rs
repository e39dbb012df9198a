use crate::dfa::Dfa;
use std::fmt::Write;

/// Render a DFA as Graphviz DOT text.
///
/// Accepting states are double circles, the initial state is marked by an
/// arrow from an invisible node, and parallel edges are merged into one edge
/// labeled with the comma-joined symbols. Output is byte-identical across
/// calls for the same automaton.
pub fn to_dot(dfa: &Dfa) -> String {
    let mut out = String::new();
    out.push_str("digraph dfa {\n");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  __start [shape=none, label=\"\"];\n");
    for state in 0..dfa.n_states() {
        let shape = if dfa.is_accepting(state) { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "  {state} [shape={shape}];");
    }
    let _ = writeln!(out, "  __start -> {};", dfa.initial());
    for state in 0..dfa.n_states() {
        // Group symbols by target, preserving canonical symbol order.
        let mut targets: Vec<(usize, Vec<char>)> = Vec::new();
        for sym in 0..dfa.alphabet().len() {
            let target = dfa.next_state(state, sym);
            let ch = dfa.alphabet().symbol(sym);
            match targets.iter_mut().find(|(t, _)| *t == target) {
                Some((_, syms)) => syms.push(ch),
                None => targets.push((target, vec![ch])),
            }
        }
        for (target, syms) in targets {
            let label: String = syms
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",");
            let _ = writeln!(out, "  {state} -> {target} [label=\"{label}\"];");
        }
    }
    out.push_str("}\n");
    out
}
