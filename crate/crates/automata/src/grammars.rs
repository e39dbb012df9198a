use crate::dfa::Dfa;
use crate::regex::RegexAst;
use crate::{parse_regex, regex_to_dfa, Alphabet, AutomataError};
use std::fmt;
use std::str::FromStr;

/// The benchmark grammars bundled with the crate.
///
/// Tomita 1-7 and Parity follow the standard formal-language-learning
/// benchmark definitions; Mod-n is binary divisibility by n (value-0
/// convention: the empty word is accepted, leading zeros are allowed);
/// D-n is the depth-limited nesting family D₀ = ε, D_n = (0 D_{n−1} 1)*;
/// the last two are (aa)* and (abab)* over {a, b}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Grammar {
    Tomita1,
    Tomita2,
    Tomita3,
    Tomita4,
    Tomita5,
    Tomita6,
    Tomita7,
    Mod2,
    Mod3,
    Mod4,
    Mod5,
    Parity,
    D2,
    D4,
    AaStar,
    AbabStar,
}

impl Grammar {
    pub const ALL: [Grammar; 16] = [
        Grammar::Tomita1,
        Grammar::Tomita2,
        Grammar::Tomita3,
        Grammar::Tomita4,
        Grammar::Tomita5,
        Grammar::Tomita6,
        Grammar::Tomita7,
        Grammar::Mod2,
        Grammar::Mod3,
        Grammar::Mod4,
        Grammar::Mod5,
        Grammar::Parity,
        Grammar::D2,
        Grammar::D4,
        Grammar::AaStar,
        Grammar::AbabStar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Grammar::Tomita1 => "tomita1",
            Grammar::Tomita2 => "tomita2",
            Grammar::Tomita3 => "tomita3",
            Grammar::Tomita4 => "tomita4",
            Grammar::Tomita5 => "tomita5",
            Grammar::Tomita6 => "tomita6",
            Grammar::Tomita7 => "tomita7",
            Grammar::Mod2 => "mod2",
            Grammar::Mod3 => "mod3",
            Grammar::Mod4 => "mod4",
            Grammar::Mod5 => "mod5",
            Grammar::Parity => "parity",
            Grammar::D2 => "d2",
            Grammar::D4 => "d4",
            Grammar::AaStar => "aa_star",
            Grammar::AbabStar => "abab_star",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Grammar::Tomita1 => "1*",
            Grammar::Tomita2 => "(10)*",
            Grammar::Tomita3 => "complement of ((0|1)*0)*1(11)*(0(0|1)*1)*0(00)*(1(0|1)*)*",
            Grammar::Tomita4 => "no substring 000",
            Grammar::Tomita5 => "even number of 0s and even number of 1s",
            Grammar::Tomita6 => "(#0 - #1) divisible by 3",
            Grammar::Tomita7 => "0*1*0*1*",
            Grammar::Mod2 => "binary value divisible by 2",
            Grammar::Mod3 => "binary value divisible by 3",
            Grammar::Mod4 => "binary value divisible by 4",
            Grammar::Mod5 => "binary value divisible by 5",
            Grammar::Parity => "even number of 1s",
            Grammar::D2 => "(0 D1 1)* with D1 = (0 1)*",
            Grammar::D4 => "(0 D3 1)* nested to depth 4",
            Grammar::AaStar => "(aa)* over {a, b}",
            Grammar::AbabStar => "(abab)* over {a, b}",
        }
    }

    pub fn alphabet(self) -> Alphabet {
        match self {
            Grammar::AaStar | Grammar::AbabStar => Alphabet::ab(),
            _ => Alphabet::binary(),
        }
    }

    /// The minimal DFA for the grammar, in canonical form.
    pub fn dfa(self) -> Dfa {
        let dfa = match self {
            Grammar::Tomita1 => from_regex("1*", Alphabet::binary()),
            Grammar::Tomita2 => from_regex("(10)*", Alphabet::binary()),
            Grammar::Tomita3 => {
                from_regex("((0|1)*0)*1(11)*(0(0|1)*1)*0(00)*(1(0|1)*)*", Alphabet::binary())
                    .complement()
            }
            Grammar::Tomita4 => from_regex("(0|1)*000(0|1)*", Alphabet::binary()).complement(),
            Grammar::Tomita5 => {
                // State 2·(odd #0s) + (odd #1s); a symbol flips its own parity.
                Dfa::new(
                    Alphabet::binary(),
                    0,
                    vec![true, false, false, false],
                    vec![vec![2, 1], vec![3, 0], vec![0, 3], vec![1, 2]],
                )
                .expect("hand-built table is well-formed")
            }
            Grammar::Tomita6 => {
                // State (#0s - #1s) mod 3; '0' adds one, '1' subtracts one.
                Dfa::new(
                    Alphabet::binary(),
                    0,
                    vec![true, false, false],
                    vec![vec![1, 2], vec![2, 0], vec![0, 1]],
                )
                .expect("hand-built table is well-formed")
            }
            Grammar::Tomita7 => from_regex("0*1*0*1*", Alphabet::binary()),
            Grammar::Mod2 => mod_n(2),
            Grammar::Mod3 => mod_n(3),
            Grammar::Mod4 => mod_n(4),
            Grammar::Mod5 => mod_n(5),
            Grammar::Parity => Dfa::new(
                Alphabet::binary(),
                0,
                vec![true, false],
                vec![vec![0, 1], vec![1, 0]],
            )
            .expect("hand-built table is well-formed"),
            Grammar::D2 => dyck_like(2),
            Grammar::D4 => dyck_like(4),
            Grammar::AaStar => from_regex("(aa)*", Alphabet::ab()),
            Grammar::AbabStar => from_regex("(abab)*", Alphabet::ab()),
        };
        dfa.minimize()
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Grammar {
    type Err = AutomataError;

    fn from_str(s: &str) -> Result<Grammar, AutomataError> {
        Grammar::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| AutomataError::UnknownGrammar(s.to_string()))
    }
}

/// Look up a builtin grammar by name and build its minimal DFA.
pub fn builtin_language(name: &str) -> Result<Dfa, AutomataError> {
    Ok(name.parse::<Grammar>()?.dfa())
}

fn from_regex(pattern: &str, alphabet: Alphabet) -> Dfa {
    let ast = parse_regex(pattern, &alphabet).expect("builtin patterns parse");
    regex_to_dfa(&ast, &alphabet).expect("builtin patterns compile")
}

/// Binary divisibility: reading digit d maps value v to 2v + d.
fn mod_n(n: usize) -> Dfa {
    let delta = (0..n).map(|s| vec![(2 * s) % n, (2 * s + 1) % n]).collect();
    let accepting = (0..n).map(|s| s == 0).collect();
    Dfa::new(Alphabet::binary(), 0, accepting, delta).expect("modular table is well-formed")
}

/// D₀ = ε, D_n = (0 D_{n−1} 1)*.
fn dyck_like(depth: usize) -> Dfa {
    let mut ast = RegexAst::Epsilon;
    for _ in 0..depth {
        ast = RegexAst::star(RegexAst::concat(
            RegexAst::concat(RegexAst::Literal('0'), ast),
            RegexAst::Literal('1'),
        ));
    }
    regex_to_dfa(&ast, &Alphabet::binary()).expect("nesting pattern compiles")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_roundtrip() {
        for g in Grammar::ALL {
            assert_eq!(g.name().parse::<Grammar>().unwrap(), g);
        }
        assert!(matches!(
            "tomita9".parse::<Grammar>(),
            Err(AutomataError::UnknownGrammar(_))
        ));
    }

    #[test]
    fn spot_checks_from_definitions() {
        let t4 = Grammar::Tomita4.dfa();
        assert!(t4.accepts_str("0101").unwrap());
        assert!(!t4.accepts_str("10001").unwrap());
        assert_eq!(t4.n_states(), 4);

        let m3 = Grammar::Mod3.dfa();
        assert!(m3.accepts_str("110").unwrap()); // six
        assert!(!m3.accepts_str("111").unwrap()); // seven
        assert_eq!(m3.n_states(), 3);

        let t1 = Grammar::Tomita1.dfa();
        assert!(t1.accepts_str("111").unwrap());
        assert!(!t1.accepts_str("101").unwrap());
        assert_eq!(t1.n_states(), 2);
    }

    #[test]
    fn mod_n_accepts_empty_and_leading_zeros() {
        for (name, n) in [(Grammar::Mod2, 2u64), (Grammar::Mod3, 3), (Grammar::Mod5, 5)] {
            let d = name.dfa();
            assert!(d.accepts(&[]).unwrap(), "{name}: empty word is value 0");
            assert!(d.accepts_str("00").unwrap(), "{name}: leading zeros");
            let value = 2 * n + n; // 3n, divisible by n
            let bits: String = format!("{value:b}");
            assert!(d.accepts_str(&bits).unwrap(), "{name}: {value}");
        }
    }

    #[test]
    fn d2_matches_expanded_regex() {
        let expanded = from_regex("(0(01)*1)*", Alphabet::binary());
        assert_eq!(Grammar::D2.dfa().equivalent(&expanded).unwrap(), None);
    }

    #[test]
    fn ab_grammars_use_their_own_alphabet() {
        let aa = Grammar::AaStar.dfa();
        assert_eq!(aa.alphabet(), &Alphabet::ab());
        assert!(aa.accepts_str("aaaa").unwrap());
        assert!(!aa.accepts_str("aab").unwrap());
        assert!(!aa.accepts_str("a").unwrap());
        assert!(aa.accepts_str("").unwrap());

        let abab = Grammar::AbabStar.dfa();
        assert!(abab.accepts_str("abab").unwrap());
        assert!(abab.accepts_str("abababab").unwrap());
        assert!(!abab.accepts_str("abba").unwrap());
    }

    #[test]
    fn builtins_are_minimal_and_canonical() {
        for g in Grammar::ALL {
            let d = g.dfa();
            let again = d.minimize();
            assert_eq!(d, again, "{g}: minimize must be idempotent on builtins");
        }
    }
}
