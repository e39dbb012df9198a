//! Reference implementations used by tests to cross-check the automaton
//! pipeline. Everything here deliberately avoids the NFA, subset and
//! minimization code paths: the regex matcher works by position sets on the
//! AST, and the grammar rules are direct counting or arithmetic checks.

use crate::{Grammar, RegexAst};

/// Match `word` against the AST by propagating sets of end positions,
/// represented as bitmasks. Words up to 31 symbols are supported, which
/// covers every exhaustive test range.
pub fn naive_regex_match(ast: &RegexAst, word: &str) -> bool {
    let chars: Vec<char> = word.chars().collect();
    assert!(chars.len() < 32, "position-set matcher holds ends in a u32");
    let ends = end_positions(ast, &chars, 0);
    ends & (1u32 << chars.len()) != 0
}

/// Bitmask of positions where a match of `ast` starting at `start` may end.
fn end_positions(ast: &RegexAst, word: &[char], start: usize) -> u32 {
    match ast {
        RegexAst::Epsilon => 1 << start,
        RegexAst::Literal(c) => {
            if start < word.len() && word[start] == *c {
                1 << (start + 1)
            } else {
                0
            }
        }
        RegexAst::Concat(l, r) => {
            let mids = end_positions(l, word, start);
            let mut out = 0u32;
            for mid in positions(mids) {
                out |= end_positions(r, word, mid);
            }
            out
        }
        RegexAst::Union(l, r) => end_positions(l, word, start) | end_positions(r, word, start),
        RegexAst::Star(e) => closure(e, word, 1 << start),
        RegexAst::Plus(e) => {
            let first = end_positions(e, word, start);
            closure(e, word, first)
        }
        RegexAst::Optional(e) => (1 << start) | end_positions(e, word, start),
    }
}

/// Smallest fixpoint of repeatedly matching `e` from any position in `seed`.
fn closure(e: &RegexAst, word: &[char], seed: u32) -> u32 {
    let mut reached = seed;
    loop {
        let mut next = reached;
        for pos in positions(reached) {
            next |= end_positions(e, word, pos);
        }
        if next == reached {
            return reached;
        }
        reached = next;
    }
}

fn positions(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| mask & (1 << i) != 0)
}

/// Direct membership rule for a builtin grammar, independent of its DFA.
pub fn grammar_oracle(grammar: Grammar, word: &str) -> bool {
    let count = |ch: char| word.chars().filter(|&c| c == ch).count();
    match grammar {
        Grammar::Tomita1 => word.chars().all(|c| c == '1'),
        Grammar::Tomita2 => word.len() % 2 == 0 && word.as_bytes().chunks(2).all(|p| p == b"10"),
        Grammar::Tomita3 => {
            // Complement of the published pattern, decided by the
            // position-set matcher rather than any automaton.
            let a = crate::Alphabet::binary();
            let ast = crate::parse_regex("((0|1)*0)*1(11)*(0(0|1)*1)*0(00)*(1(0|1)*)*", &a)
                .expect("pattern parses");
            !naive_regex_match(&ast, word)
        }
        Grammar::Tomita4 => !word.contains("000"),
        Grammar::Tomita5 => count('0') % 2 == 0 && count('1') % 2 == 0,
        Grammar::Tomita6 => (count('0') as i64 - count('1') as i64).rem_euclid(3) == 0,
        Grammar::Tomita7 => {
            // The run pattern must be a subsequence of 0,1,0,1.
            let mut runs = Vec::new();
            for c in word.chars() {
                if runs.last() != Some(&c) {
                    runs.push(c);
                }
            }
            let mut allowed = ['0', '1', '0', '1'].into_iter();
            runs.into_iter().all(|r| allowed.any(|a| a == r))
        }
        Grammar::Mod2 => numeric_value(word) % 2 == 0,
        Grammar::Mod3 => numeric_value(word) % 3 == 0,
        Grammar::Mod4 => numeric_value(word) % 4 == 0,
        Grammar::Mod5 => numeric_value(word) % 5 == 0,
        Grammar::Parity => count('1') % 2 == 0,
        Grammar::D2 => bounded_nesting(word, 2),
        Grammar::D4 => bounded_nesting(word, 4),
        Grammar::AaStar => word.chars().all(|c| c == 'a') && word.len() % 2 == 0,
        Grammar::AbabStar => {
            word.len() % 4 == 0 && word.as_bytes().chunks(4).all(|p| p == b"abab")
        }
    }
}

/// Value of a binary string read most-significant first; ε is zero.
fn numeric_value(word: &str) -> u128 {
    word.chars().fold(0u128, |v, c| {
        v * 2 + if c == '1' { 1 } else { 0 }
    })
}

/// Balanced 0/1 brackets with nesting depth at most `max_depth`.
fn bounded_nesting(word: &str, max_depth: i32) -> bool {
    let mut depth = 0i32;
    for c in word.chars() {
        depth += if c == '0' { 1 } else { -1 };
        if depth < 0 || depth > max_depth {
            return false;
        }
    }
    depth == 0
}
