//! Finite automata over small character alphabets: regex parsing, DFA
//! construction and minimization, language equivalence with shortest
//! counterexamples, a set of built-in benchmark grammars, and DOT export.
//!
//! All values are immutable after construction; every operation here is a
//! pure function and safe to call from any number of threads.

mod alphabet;
mod dfa;
mod dot;
mod error;
mod grammars;
mod nfa;
mod regex;

pub mod oracles;

pub use alphabet::Alphabet;
pub use dfa::Dfa;
pub use dot::to_dot;
pub use error::AutomataError;
pub use grammars::{builtin_language, Grammar};
pub use regex::{parse_regex, RegexAst};

/// Compile a regular expression into the minimal complete DFA for its
/// language (Thompson construction, subset construction, Hopcroft
/// minimization). The result always has a total transition table; a dead
/// state is present whenever the language is not suffix-closed.
pub fn regex_to_dfa(ast: &RegexAst, alphabet: &Alphabet) -> Result<Dfa, AutomataError> {
    ast.check_literals(alphabet)?;
    let nfa = nfa::thompson(ast, alphabet);
    Ok(nfa.determinize().minimize())
}
