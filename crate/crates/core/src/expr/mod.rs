//! Symbolic scalar expressions over named variables.
//!
//! Expressions are trees of exact rational constants, variables, field
//! operations, integer powers and the function set sin/cos/tan/sec/exp/ln/sqrt.
//! Floats only appear at evaluation time. All operations are pure; values are
//! immutable after construction.

mod diff;
mod eval;
pub mod parse;
mod print;
pub mod simplify;
#[cfg(test)]
mod tests;
mod zero;

pub use eval::{EvalError, Point};
pub use zero::{is_zero, ZeroTest};

use num::BigRational;
use num::{One, Signed, Zero};

pub type Rat = BigRational;

/// Builds an exact rational from an integer.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

/// Builds an exact rational p/q.
pub fn ratio(p: i64, q: i64) -> Rat {
    Rat::new(p.into(), q.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sec,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sec => "sec",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sec" => Func::Sec,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

/// A symbolic expression. `Add` and `Mul` hold two or more children; the
/// canonical form produced by [`simplify::simplify`] keeps them sorted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Const(Rat),
    Var(String),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    /// Integer power; exponent may be negative.
    Pow(Box<Expr>, i32),
    Div(Box<Expr>, Box<Expr>),
    Func(Func, Box<Expr>),
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Const(Rat::zero())
    }

    pub fn one() -> Expr {
        Expr::Const(Rat::one())
    }

    pub fn num(n: i64) -> Expr {
        Expr::Const(rat(n))
    }

    pub fn constant(r: Rat) -> Expr {
        Expr::Const(r)
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        Expr::Func(f, Box::new(arg))
    }

    pub fn is_const_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    pub fn is_const_one(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_one())
    }

    /// Sum with light normalization: flattens nested sums, folds constants
    /// and drops zeros. Full canonicalization is simplify's job.
    pub fn add_all(terms: Vec<Expr>) -> Expr {
        let mut out = Vec::new();
        let mut acc = Rat::zero();
        for t in terms {
            match t {
                Expr::Const(c) => acc += c,
                Expr::Add(kids) => {
                    for k in kids {
                        match k {
                            Expr::Const(c) => acc += c,
                            other => out.push(other),
                        }
                    }
                }
                other => out.push(other),
            }
        }
        if !acc.is_zero() {
            out.push(Expr::Const(acc));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::Add(out),
        }
    }

    /// Product with light normalization: flattens, folds constants, handles
    /// the zero annihilator and unit factors.
    pub fn mul_all(factors: Vec<Expr>) -> Expr {
        let mut out = Vec::new();
        let mut acc = Rat::one();
        for f in factors {
            match f {
                Expr::Const(c) => {
                    if c.is_zero() {
                        return Expr::zero();
                    }
                    acc *= c;
                }
                Expr::Mul(kids) => {
                    for k in kids {
                        match k {
                            Expr::Const(c) => {
                                if c.is_zero() {
                                    return Expr::zero();
                                }
                                acc *= c;
                            }
                            other => out.push(other),
                        }
                    }
                }
                other => out.push(other),
            }
        }
        if out.is_empty() {
            return Expr::Const(acc);
        }
        if !acc.is_one() {
            out.insert(0, Expr::Const(acc));
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Expr::Mul(out)
        }
    }

    pub fn neg(self) -> Expr {
        Expr::mul_all(vec![Expr::num(-1), self])
    }

    pub fn pow(self, k: i32) -> Expr {
        match k {
            0 => Expr::one(),
            1 => self,
            _ => match &self {
                Expr::Const(c) if !c.is_zero() => {
                    let mut r = Rat::one();
                    for _ in 0..k.unsigned_abs() {
                        r *= c.clone();
                    }
                    if k < 0 {
                        r = r.recip();
                    }
                    Expr::Const(r)
                }
                _ => Expr::Pow(Box::new(self), k),
            },
        }
    }

    /// Quotient; kept unexpanded (denominator certificates are the caller's
    /// concern). Constant denominators fold into a scalar factor.
    pub fn divide(self, d: Expr) -> Expr {
        if self.is_const_zero() {
            return Expr::zero();
        }
        match d {
            Expr::Const(c) if !c.is_zero() => {
                Expr::mul_all(vec![Expr::Const(c.recip()), self])
            }
            other => Expr::Div(Box::new(self), Box::new(other)),
        }
    }

    /// All variable names occurring in the expression.
    pub fn variables(&self) -> std::collections::BTreeSet<String> {
        let mut set = std::collections::BTreeSet::new();
        self.collect_vars(&mut set);
        set
    }

    fn collect_vars(&self, set: &mut std::collections::BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                set.insert(v.clone());
            }
            Expr::Add(kids) | Expr::Mul(kids) => {
                for k in kids {
                    k.collect_vars(set);
                }
            }
            Expr::Pow(b, _) => b.collect_vars(set),
            Expr::Div(a, b) => {
                a.collect_vars(set);
                b.collect_vars(set);
            }
            Expr::Func(_, a) => a.collect_vars(set),
        }
    }

    /// Substitutes expressions for variables (used for composing with a map).
    /// Variables without a binding are left untouched.
    pub fn substitute(&self, bindings: &std::collections::BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) => bindings.get(v).cloned().unwrap_or_else(|| self.clone()),
            Expr::Add(kids) => Expr::add_all(kids.iter().map(|k| k.substitute(bindings)).collect()),
            Expr::Mul(kids) => Expr::mul_all(kids.iter().map(|k| k.substitute(bindings)).collect()),
            Expr::Pow(b, k) => b.substitute(bindings).pow(*k),
            Expr::Div(a, b) => a.substitute(bindings).divide(b.substitute(bindings)),
            Expr::Func(f, a) => Expr::func(*f, a.substitute(bindings)),
        }
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::add_all(vec![self, rhs])
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::add_all(vec![self, rhs.neg()])
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul_all(vec![self, rhs])
    }
}

/// Signed helper: true when the canonical leading coefficient is negative
/// (used by the printer to emit `a - b` instead of `a + -1*b`).
pub(crate) fn leading_is_negative(e: &Expr) -> bool {
    match e {
        Expr::Const(c) => c.is_negative(),
        Expr::Mul(kids) => kids
            .iter()
            .find_map(|k| match k {
                Expr::Const(c) => Some(c.is_negative()),
                _ => None,
            })
            .unwrap_or(false),
        _ => false,
    }
}
