//! Recursive-descent parser for the LTLf surface syntax.
//!
//! Precedence, loosest to tightest: `<->`, `->`, `|`, `&`, `U`/`R`,
//! unary (`!`, `X`, `N`, `F`, `G`), then atoms, constants and parentheses.
//! `->` and the temporal binaries associate to the right, the rest to the
//! left. `F`, `G`, `->` and `<->` are rewritten into core connectives.

use super::formula::{is_identifier, Formula, PropSet};
use super::LtlfError;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    True,
    False,
    LParen,
    RParen,
    Not,
    And,
    Or,
    Implies,
    Iff,
    Next,
    WeakNext,
    Eventually,
    Always,
    Until,
    Release,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::True => "`true`".into(),
            Tok::False => "`false`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Not => "`!`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::Implies => "`->`".into(),
            Tok::Iff => "`<->`".into(),
            Tok::Next => "`X`".into(),
            Tok::WeakNext => "`N`".into(),
            Tok::Eventually => "`F`".into(),
            Tok::Always => "`G`".into(),
            Tok::Until => "`U`".into(),
            Tok::Release => "`R`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

const EXPECT_OPERAND: &[&str] = &["atom", "true", "false", "(", "!", "X", "N", "F", "G"];
const EXPECT_OPERATOR: &[&str] = &["&", "|", "->", "<->", "U", "R", ")", "end of input"];

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, LtlfError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'(' => {
                i += 1;
                Tok::LParen
            }
            b')' => {
                i += 1;
                Tok::RParen
            }
            b'!' => {
                i += 1;
                Tok::Not
            }
            b'&' => {
                i += 1;
                Tok::And
            }
            b'|' => {
                i += 1;
                Tok::Or
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 2;
                Tok::Implies
            }
            b'<' if bytes.get(i + 1) == Some(&b'-') && bytes.get(i + 2) == Some(&b'>') => {
                i += 3;
                Tok::Iff
            }
            c if c.is_ascii_alphabetic() => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                match word {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "X" => Tok::Next,
                    "N" => Tok::WeakNext,
                    "F" => Tok::Eventually,
                    "G" => Tok::Always,
                    "U" => Tok::Until,
                    "R" => Tok::Release,
                    _ => {
                        debug_assert!(is_identifier(word));
                        Tok::Ident(word.to_string())
                    }
                }
            }
            _ => {
                return Err(LtlfError::Syntax {
                    offset: start,
                    expected: EXPECT_OPERAND.iter().chain(EXPECT_OPERATOR).map(|s| s.to_string()).collect(),
                    found: text[start..].chars().next().map(String::from).unwrap_or_default(),
                })
            }
        };
        out.push((start, tok));
    }
    out.push((text.len(), Tok::Eof));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    props: &'a PropSet,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> LtlfError {
        let (offset, tok) = &self.toks[self.pos];
        LtlfError::Syntax {
            offset: *offset,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: tok.describe(),
        }
    }

    fn iff(&mut self) -> Result<Formula, LtlfError> {
        let mut lhs = self.implies()?;
        while *self.peek() == Tok::Iff {
            self.bump();
            let rhs = self.implies()?;
            lhs = Formula::and(
                Formula::or(Formula::not(lhs.clone()), rhs.clone()),
                Formula::or(Formula::not(rhs), lhs),
            );
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Formula, LtlfError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implies()?;
            return Ok(Formula::or(Formula::not(lhs), rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, LtlfError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, LtlfError> {
        let mut lhs = self.binary_temporal()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.binary_temporal()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn binary_temporal(&mut self) -> Result<Formula, LtlfError> {
        let lhs = self.unary()?;
        match self.peek() {
            Tok::Until => {
                self.bump();
                Ok(Formula::until(lhs, self.binary_temporal()?))
            }
            Tok::Release => {
                self.bump();
                Ok(Formula::release(lhs, self.binary_temporal()?))
            }
            _ => Ok(lhs),
        }
    }

    fn unary(&mut self) -> Result<Formula, LtlfError> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Next => {
                self.bump();
                Ok(Formula::next(self.unary()?))
            }
            Tok::WeakNext => {
                self.bump();
                Ok(Formula::weak_next(self.unary()?))
            }
            Tok::Eventually => {
                self.bump();
                Ok(Formula::eventually(self.unary()?))
            }
            Tok::Always => {
                self.bump();
                Ok(Formula::always(self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, LtlfError> {
        match self.peek().clone() {
            Tok::True => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::False => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Ident(name) => {
                self.bump();
                match self.props.get(&name) {
                    Some(p) => Ok(Formula::Atom(p.clone())),
                    None => Err(LtlfError::UnknownAtom(name)),
                }
            }
            Tok::LParen => {
                self.bump();
                let inner = self.iff()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error(&[")", "&", "|", "->", "<->", "U", "R"]));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.error(EXPECT_OPERAND)),
        }
    }
}

/// Parses `text` against the declared propositions.
pub fn parse(text: &str, props: &PropSet) -> Result<Formula, LtlfError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, props };
    let f = p.iff()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(EXPECT_OPERATOR));
    }
    Ok(f)
}
