//! Recursive-descent parser for the formula grammar:
//!
//! ```text
//! formula := iff
//! iff     := imp ("<->" imp)*
//! imp     := or ("->" or)*
//! or      := and ("|" and)*
//! and     := unary ("&" unary)*
//! unary   := "~" unary | quant | atom | "(" formula ")"
//! quant   := ("exists" ["[" ["="] INT "]"] | "forall") VAR "." unary
//! atom    := "P" INT "(" VAR ")" | "E(" VAR "," VAR ")" | VAR ("=" | "!=") VAR
//! ```
//!
//! `<->`, `|` and `&` associate to the left, `->` to the right.

use thiserror::Error;

use super::Formula;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("syntax error at byte {pos}: {message}")]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u32),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Tilde,
    Amp,
    Pipe,
    Arrow,
    DoubleArrow,
    Equals,
    NotEquals,
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Int(n) => format!("integer {n}"),
        Tok::End => "end of input".into(),
        other => format!("{other:?}"),
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
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
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'[' => Tok::LBracket,
            b']' => Tok::RBracket,
            b',' => Tok::Comma,
            b'.' => Tok::Dot,
            b'~' => Tok::Tilde,
            b'&' => Tok::Amp,
            b'|' => Tok::Pipe,
            b'=' => Tok::Equals,
            b'!' if bytes.get(i + 1) == Some(&b'=') => {
                i += 1;
                Tok::NotEquals
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Arrow
            }
            b'<' if bytes.get(i + 1) == Some(&b'-') && bytes.get(i + 2) == Some(&b'>') => {
                i += 2;
                Tok::DoubleArrow
            }
            b'0'..=b'9' => {
                while i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                }
                let n = text[start..=i].parse().map_err(|_| ParseError {
                    pos: start,
                    message: "integer too large".into(),
                })?;
                Tok::Int(n)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i + 1 < bytes.len()
                    && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_' || bytes[i + 1] == b'\'')
                {
                    i += 1;
                }
                Tok::Ident(text[start..=i].to_string())
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    pos: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.pos(),
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {}, found {}", describe(&want), describe(self.peek())))
        }
    }

    fn var(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) if name != "exists" && name != "forall" => {
                self.bump();
                Ok(name)
            }
            other => self.error(format!("expected variable, found {}", describe(&other))),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.implication()?;
        while *self.peek() == Tok::DoubleArrow {
            self.bump();
            lhs = lhs.iff(self.implication()?);
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            Ok(lhs.implies(self.implication()?))
        } else {
            Ok(lhs)
        }
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            lhs = lhs.or(self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            lhs = lhs.and(self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Tilde => {
                self.bump();
                Ok(self.unary()?.not())
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(kw) if kw == "exists" || kw == "forall" => self.quantifier(kw == "forall"),
            Tok::Ident(_) => self.atom(),
            other => self.error(format!("expected a formula, found {}", describe(&other))),
        }
    }

    fn quantifier(&mut self, universal: bool) -> Result<Formula, ParseError> {
        self.bump();
        let mut counting = None;
        if !universal && *self.peek() == Tok::LBracket {
            self.bump();
            let exact = if *self.peek() == Tok::Equals {
                self.bump();
                true
            } else {
                false
            };
            let k_pos = self.pos();
            let k = match self.bump() {
                Tok::Int(k) => k,
                other => {
                    return Err(ParseError {
                        pos: k_pos,
                        message: format!("expected count, found {}", describe(&other)),
                    })
                }
            };
            if !exact && k == 0 {
                return Err(ParseError {
                    pos: k_pos,
                    message: "counting quantifier exists[k] needs k >= 1".into(),
                });
            }
            self.expect(Tok::RBracket)?;
            counting = Some((exact, k));
        }
        let v = self.var()?;
        self.expect(Tok::Dot)?;
        let body = Box::new(self.unary()?);
        Ok(match (universal, counting) {
            (true, _) => Formula::Forall(v, body),
            (false, None) => Formula::Exists(v, body),
            (false, Some((false, k))) => Formula::CountExists(k, v, body),
            (false, Some((true, k))) => Formula::CountExistsExact(k, v, body),
        })
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        let start = self.pos();
        let name = self.var()?;
        if *self.peek() == Tok::LParen {
            if name == "E" {
                self.bump();
                let a = self.var()?;
                self.expect(Tok::Comma)?;
                let b = self.var()?;
                self.expect(Tok::RParen)?;
                return Ok(Formula::Edge(a, b));
            }
            if let Some(index) = predicate_index(&name) {
                if index == 0 {
                    return Err(ParseError {
                        pos: start,
                        message: "predicate indices start at 1".into(),
                    });
                }
                self.bump();
                let v = self.var()?;
                self.expect(Tok::RParen)?;
                return Ok(Formula::Pred(index, v));
            }
            return self.error(format!("unknown relation `{name}`"));
        }
        let negated = match self.peek() {
            Tok::Equals => false,
            Tok::NotEquals => true,
            other => {
                return self.error(format!("expected `=` or `!=`, found {}", describe(other)));
            }
        };
        self.bump();
        let rhs = self.var()?;
        let f = Formula::Eq(name, rhs);
        Ok(if negated { f.not() } else { f })
    }
}

fn predicate_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('P')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        at: 0,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::End {
        return p.error(format!("unexpected {}", describe(p.peek())));
    }
    Ok(f)
}
