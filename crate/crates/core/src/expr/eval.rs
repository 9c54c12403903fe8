//! Numeric evaluation of expressions at a point.

use super::{Expr, Func};
use num::ToPrimitive;
use std::collections::BTreeMap;
use thiserror::Error;

/// A binding of every relevant variable (states, inputs, parameters) to a
/// real value. Deterministic iteration order (sorted by name).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Point {
    vals: BTreeMap<String, f64>,
}

impl Point {
    pub fn new() -> Point {
        Point::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Point
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut p = Point::new();
        for (k, v) in pairs {
            p.set(k, v);
        }
        p
    }

    pub fn set(&mut self, name: impl Into<String>, v: f64) {
        self.vals.insert(name.into(), v);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.vals.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.vals.keys().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.vals.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    /// Merges `other` into a copy of `self`, `other` winning on collisions.
    pub fn merged(&self, other: &Point) -> Point {
        let mut p = self.clone();
        for (k, v) in other.iter() {
            p.set(k, v);
        }
        p
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVar(String),
    #[error("division by zero")]
    DivByZero,
    #[error("ln of non-positive value")]
    LnDomain,
    #[error("sqrt of negative value")]
    SqrtDomain,
    #[error("evaluation produced a non-finite value")]
    NonFinite,
}

impl Expr {
    pub fn eval(&self, at: &Point) -> Result<f64, EvalError> {
        let v = self.eval_inner(at)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn eval_inner(&self, at: &Point) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Const(c) => c.to_f64().ok_or(EvalError::NonFinite)?,
            Expr::Var(v) => at
                .get(v)
                .ok_or_else(|| EvalError::UnboundVar(v.clone()))?,
            Expr::Add(kids) => {
                let mut s = 0.0;
                for k in kids {
                    s += k.eval_inner(at)?;
                }
                s
            }
            Expr::Mul(kids) => {
                let mut p = 1.0;
                for k in kids {
                    p *= k.eval_inner(at)?;
                }
                p
            }
            Expr::Pow(b, k) => {
                let bv = b.eval_inner(at)?;
                if *k < 0 && bv == 0.0 {
                    return Err(EvalError::DivByZero);
                }
                bv.powi(*k)
            }
            Expr::Div(a, b) => {
                let bv = b.eval_inner(at)?;
                if bv == 0.0 {
                    return Err(EvalError::DivByZero);
                }
                a.eval_inner(at)? / bv
            }
            Expr::Func(f, a) => {
                let av = a.eval_inner(at)?;
                match f {
                    Func::Sin => av.sin(),
                    Func::Cos => av.cos(),
                    Func::Tan => {
                        let c = av.cos();
                        if c == 0.0 {
                            return Err(EvalError::DivByZero);
                        }
                        av.sin() / c
                    }
                    Func::Sec => {
                        let c = av.cos();
                        if c == 0.0 {
                            return Err(EvalError::DivByZero);
                        }
                        1.0 / c
                    }
                    Func::Exp => av.exp(),
                    Func::Ln => {
                        if av <= 0.0 {
                            return Err(EvalError::LnDomain);
                        }
                        av.ln()
                    }
                    Func::Sqrt => {
                        if av < 0.0 {
                            return Err(EvalError::SqrtDomain);
                        }
                        av.sqrt()
                    }
                }
            }
        })
    }
}
