//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' exponent)?
//! exponent:= ['-'] digits | '(' ['-'] digits ')'
//! atom    := number | ident | ident '(' expr ')' | '(' expr ')'
//! number  := digits ['.' digits]
//! ```
//!
//! Identifiers must be declared in the allowed-variable set; function names
//! are sin, cos, tan, sec, exp, ln, sqrt. ASCII only.

use super::{Expr, Func, Rat};
use num::BigInt;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
#[error("parse error at column {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

fn err<T>(pos: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        pos,
        msg: msg.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rat),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                toks.push((i, Tok::Plus));
                i += 1;
            }
            '-' => {
                toks.push((i, Tok::Minus));
                i += 1;
            }
            '*' => {
                toks.push((i, Tok::Star));
                i += 1;
            }
            '/' => {
                toks.push((i, Tok::Slash));
                i += 1;
            }
            '^' => {
                toks.push((i, Tok::Caret));
                i += 1;
            }
            '(' => {
                toks.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                toks.push((i, Tok::RParen));
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let int_part: BigInt = text[start..i].parse().unwrap();
                let mut value = Rat::from_integer(int_part);
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    let fstart = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if fstart == i {
                        return err(i, "expected digits after decimal point");
                    }
                    let frac: BigInt = text[fstart..i].parse().unwrap();
                    let scale = BigInt::from(10u32).pow((i - fstart) as u32);
                    value += Rat::new(frac, scale);
                }
                toks.push((start, Tok::Num(value)));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((start, Tok::Ident(text[start..i].to_string())));
            }
            _ => return err(i, format!("unexpected character `{c}`")),
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    end: usize,
    vars: &'a BTreeSet<String>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        let at = self.here();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            _ => err(at, format!("expected {what}")),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Some(Tok::Minus) => {
                    self.bump();
                    terms.push(self.term()?.neg());
                }
                _ => break,
            }
        }
        Ok(Expr::add_all(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    let rhs = self.unary()?;
                    acc = Expr::mul_all(vec![acc, rhs]);
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let rhs = self.unary()?;
                    acc = acc.divide(rhs);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            let k = self.exponent()?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        let at = self.here();
        let parens = matches!(self.peek(), Some(Tok::LParen));
        if parens {
            self.bump();
        }
        let mut sign = 1i64;
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            sign = -1;
        }
        let k = match self.bump() {
            Some(Tok::Num(r)) if r.is_integer() => {
                use num::ToPrimitive;
                match r.to_integer().to_i32() {
                    Some(k) => k,
                    None => return err(at, "exponent out of range"),
                }
            }
            _ => return err(at, "expected an integer exponent"),
        };
        if parens {
            self.expect(Tok::RParen, "`)` after exponent")?;
        }
        Ok(sign as i32 * k)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.here();
        match self.bump() {
            Some(Tok::Num(r)) => Ok(Expr::Const(r)),
            Some(Tok::Ident(name)) => {
                if let Some(f) = Func::from_name(&name) {
                    self.expect(Tok::LParen, &format!("`(` after function `{name}`"))?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "closing `)`")?;
                    return Ok(Expr::func(f, arg));
                }
                if !self.vars.contains(&name) {
                    return err(at, format!("unknown identifier `{name}`"));
                }
                Ok(Expr::Var(name))
            }
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "closing `)`")?;
                Ok(e)
            }
            _ => err(at, "expected a number, identifier or `(`"),
        }
    }
}

/// Parses `text` over the allowed identifier set `vars`.
pub fn parse_expr<S: AsRef<str>>(text: &str, vars: &[S]) -> Result<Expr, ParseError> {
    let set: BTreeSet<String> = vars.iter().map(|s| s.as_ref().to_string()).collect();
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return err(0, "empty expression");
    }
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        end: text.len(),
        vars: &set,
    };
    let e = p.expr()?;
    if p.pos != toks.len() {
        return err(p.here(), "trailing input");
    }
    Ok(e)
}
