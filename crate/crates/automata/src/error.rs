use thiserror::Error;

/// Errors produced by the automata layer.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum AutomataError {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("regex syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown literal '{ch}' at position {pos}")]
    UnknownLiteral { ch: char, pos: usize },
    #[error("symbol '{0}' is not in the alphabet")]
    UnknownSymbol(char),
    #[error("the two automata have different alphabets")]
    AlphabetMismatch,
    #[error("unknown grammar '{0}'")]
    UnknownGrammar(String),
    #[error("malformed DFA: {0}")]
    InvalidDfa(String),
}
