use crate::{Alphabet, AutomataError};
use std::fmt;

/// Abstract syntax tree of a regular expression over a character alphabet.
///
/// Supported operators: literals, `ε`, implicit concatenation, `|`, `*`,
/// `+`, `?` and parenthesised grouping. No character classes, anchors or
/// backreferences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegexAst {
    Epsilon,
    Literal(char),
    Concat(Box<RegexAst>, Box<RegexAst>),
    Union(Box<RegexAst>, Box<RegexAst>),
    Star(Box<RegexAst>),
    Plus(Box<RegexAst>),
    Optional(Box<RegexAst>),
}

impl RegexAst {
    pub fn concat(l: RegexAst, r: RegexAst) -> RegexAst {
        RegexAst::Concat(Box::new(l), Box::new(r))
    }

    pub fn union(l: RegexAst, r: RegexAst) -> RegexAst {
        RegexAst::Union(Box::new(l), Box::new(r))
    }

    pub fn star(e: RegexAst) -> RegexAst {
        RegexAst::Star(Box::new(e))
    }

    /// Verify that every literal belongs to `alphabet`.
    pub fn check_literals(&self, alphabet: &Alphabet) -> Result<(), AutomataError> {
        match self {
            RegexAst::Epsilon => Ok(()),
            RegexAst::Literal(c) => match alphabet.index_of(*c) {
                Some(_) => Ok(()),
                None => Err(AutomataError::UnknownSymbol(*c)),
            },
            RegexAst::Concat(l, r) | RegexAst::Union(l, r) => {
                l.check_literals(alphabet)?;
                r.check_literals(alphabet)
            }
            RegexAst::Star(e) | RegexAst::Plus(e) | RegexAst::Optional(e) => {
                e.check_literals(alphabet)
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            RegexAst::Union(..) => 0,
            RegexAst::Concat(..) => 1,
            RegexAst::Star(_) | RegexAst::Plus(_) | RegexAst::Optional(_) => 2,
            RegexAst::Epsilon | RegexAst::Literal(_) => 3,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let wrap = self.precedence() < min;
        if wrap {
            write!(f, "(")?;
        }
        match self {
            RegexAst::Epsilon => write!(f, "ε")?,
            RegexAst::Literal(c) => write!(f, "{c}")?,
            // The parser folds both operators to the left, so a right child
            // of the same kind must be parenthesised for print/parse to be an
            // exact round trip.
            RegexAst::Concat(l, r) => {
                l.fmt_prec(f, 1)?;
                r.fmt_prec(f, 2)?;
            }
            RegexAst::Union(l, r) => {
                l.fmt_prec(f, 0)?;
                write!(f, "|")?;
                r.fmt_prec(f, 1)?;
            }
            RegexAst::Star(e) => {
                e.fmt_prec(f, 3)?;
                write!(f, "*")?;
            }
            RegexAst::Plus(e) => {
                e.fmt_prec(f, 3)?;
                write!(f, "+")?;
            }
            RegexAst::Optional(e) => {
                e.fmt_prec(f, 3)?;
                write!(f, "?")?;
            }
        }
        if wrap {
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// Pretty-printer with minimal parentheses. `parse_regex` of the output
/// yields an identical AST.
impl fmt::Display for RegexAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Parse a regular expression over the given alphabet.
///
/// Precedence, tightest first: postfix `*`/`+`/`?`, implicit concatenation,
/// `|`. The empty string and `ε` both denote the empty-word expression.
pub fn parse_regex(text: &str, alphabet: &Alphabet) -> Result<RegexAst, AutomataError> {
    let chars: Vec<char> = text.chars().collect();
    let mut p = Parser { chars: &chars, pos: 0, alphabet };
    let ast = p.union()?;
    if p.pos < p.chars.len() {
        return Err(AutomataError::Syntax {
            pos: p.pos,
            msg: format!("unexpected '{}'", p.chars[p.pos]),
        });
    }
    Ok(ast)
}

struct Parser<'a> {
    chars: &'a [char],
    pos: usize,
    alphabet: &'a Alphabet,
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn union(&mut self) -> Result<RegexAst, AutomataError> {
        let mut lhs = self.concat()?;
        while self.peek() == Some('|') {
            self.pos += 1;
            let rhs = self.concat()?;
            lhs = RegexAst::union(lhs, rhs);
        }
        Ok(lhs)
    }

    fn concat(&mut self) -> Result<RegexAst, AutomataError> {
        let mut parts = Vec::new();
        while let Some(c) = self.peek() {
            if c == '|' || c == ')' {
                break;
            }
            parts.push(self.postfix()?);
        }
        // An empty factor list is the empty word, so "" and "(|a)" parse.
        let mut it = parts.into_iter();
        match it.next() {
            None => Ok(RegexAst::Epsilon),
            Some(first) => Ok(it.fold(first, RegexAst::concat)),
        }
    }

    fn postfix(&mut self) -> Result<RegexAst, AutomataError> {
        let mut expr = self.atom()?;
        while let Some(c) = self.peek() {
            expr = match c {
                '*' => RegexAst::Star(Box::new(expr)),
                '+' => RegexAst::Plus(Box::new(expr)),
                '?' => RegexAst::Optional(Box::new(expr)),
                _ => break,
            };
            self.pos += 1;
        }
        Ok(expr)
    }

    fn atom(&mut self) -> Result<RegexAst, AutomataError> {
        let pos = self.pos;
        match self.peek() {
            None => Err(AutomataError::Syntax { pos, msg: "unexpected end of input".into() }),
            Some('(') => {
                self.pos += 1;
                let inner = self.union()?;
                if self.peek() != Some(')') {
                    return Err(AutomataError::Syntax { pos: self.pos, msg: "expected ')'".into() });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c @ ('*' | '+' | '?' | ')')) => {
                Err(AutomataError::Syntax { pos, msg: format!("unexpected '{c}'") })
            }
            Some('ε') => {
                self.pos += 1;
                Ok(RegexAst::Epsilon)
            }
            Some(c) => {
                if alphabet_has(self.alphabet, c) {
                    self.pos += 1;
                    Ok(RegexAst::Literal(c))
                } else {
                    Err(AutomataError::UnknownLiteral { ch: c, pos })
                }
            }
        }
    }
}

fn alphabet_has(a: &Alphabet, c: char) -> bool {
    a.index_of(c).is_some()
}
