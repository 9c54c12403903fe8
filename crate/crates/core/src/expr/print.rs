//! Plain-text printing. The output is re-parseable by [`super::parse`];
//! round-tripping a canonical expression reproduces it exactly.

use super::{leading_is_negative, Expr};
use num::{One, Signed, Zero};
use std::fmt;

// precedence levels: sum < product < power < atom
const P_SUM: u8 = 1;
const P_PROD: u8 = 2;
const P_POW: u8 = 3;
const P_ATOM: u8 = 4;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(_) => P_SUM,
        Expr::Mul(_) | Expr::Div(..) => P_PROD,
        Expr::Pow(..) => P_POW,
        Expr::Const(c) => {
            if c.is_negative() {
                P_SUM // -3 needs parens inside products
            } else if !c.denom().is_one() {
                P_PROD // 3/4 reads as a quotient
            } else {
                P_ATOM
            }
        }
        Expr::Var(_) | Expr::Func(..) => P_ATOM,
    }
}

fn write_at(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if prec(e) < min {
        write!(f, "(")?;
        write_raw(e, f)?;
        write!(f, ")")
    } else {
        write_raw(e, f)
    }
}

fn write_raw(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Const(c) => {
            if c.denom().is_one() {
                write!(f, "{}", c.numer())
            } else {
                write!(f, "{}/{}", c.numer(), c.denom())
            }
        }
        Expr::Var(v) => write!(f, "{v}"),
        Expr::Add(kids) => {
            for (i, k) in kids.iter().enumerate() {
                if i == 0 {
                    write_at(k, P_SUM, f)?;
                } else if leading_is_negative(k) {
                    write!(f, " - ")?;
                    write_at(&negated(k), P_PROD, f)?;
                } else {
                    write!(f, " + ")?;
                    write_at(k, P_PROD, f)?;
                }
            }
            Ok(())
        }
        Expr::Mul(kids) => {
            // pull a leading -1 out as a sign
            let mut rest: Vec<&Expr> = kids.iter().collect();
            let mut neg = false;
            if let Some(Expr::Const(c)) = rest.first().copied() {
                if *c == -super::Rat::one() && rest.len() > 1 {
                    neg = true;
                    rest.remove(0);
                }
            }
            if neg {
                write!(f, "-")?;
            }
            for (i, k) in rest.iter().enumerate() {
                if i > 0 {
                    write!(f, "*")?;
                }
                write_at(k, P_POW, f)?;
            }
            Ok(())
        }
        Expr::Pow(b, k) => {
            write_at(b, P_ATOM, f)?;
            if *k < 0 {
                write!(f, "^({k})")
            } else {
                write!(f, "^{k}")
            }
        }
        Expr::Div(a, b) => {
            write_at(a, P_PROD, f)?;
            write!(f, "/")?;
            write_at(b, P_POW, f)
        }
        Expr::Func(func, a) => {
            write!(f, "{}(", func.name())?;
            write_raw(a, f)?;
            write!(f, ")")
        }
    }
}

/// Negation used only for display (`a - b` rendering).
fn negated(e: &Expr) -> Expr {
    match e {
        Expr::Const(c) => Expr::Const(-c.clone()),
        Expr::Mul(kids) => {
            let mut kids = kids.clone();
            if let Some(Expr::Const(c)) = kids.first_mut() {
                let nc = -c.clone();
                if nc.is_one() {
                    kids.remove(0);
                } else {
                    *c = nc;
                }
                return Expr::mul_all(kids);
            }
            kids.insert(0, Expr::num(-1));
            Expr::Mul(kids)
        }
        other => other.clone().neg(),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Expr::Const(c) = self {
            // top-level constants print bare, including negatives
            if c.denom().is_one() {
                return write!(f, "{}", c.numer());
            }
            if c.is_negative() {
                return write!(f, "-{}/{}", -c.numer(), c.denom());
            }
        }
        write_raw(self, f)
    }
}

impl Expr {
    /// `true` when the expression is the literal constant zero.
    pub fn is_literal_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }
}
