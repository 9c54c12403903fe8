//! Canonical forms and structural zero detection.
//!
//! Every expression normalizes to a ratio of two expanded polynomials whose
//! indeterminates ("atoms") are variables and irreducible function terms.
//! `tan` and `sec` are rewritten into sin/cos, even cosine powers are reduced
//! through sin^2+cos^2=1, and even sqrt powers collapse when the radicand is
//! polynomial. Zero testing on the numerator is then exact.
//!
//! No polynomial gcd is attempted beyond monomial content and scalar
//! proportionality, so quotients may stay unreduced; that affects size, not
//! soundness.

use super::{Expr, Func, Rat};
use num::{One, Signed, Zero};
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Atom {
    Var(String),
    Fun(Func, Expr), // argument already canonical
}

type Mono = BTreeMap<Atom, u32>;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
struct Poly {
    terms: BTreeMap<Mono, Rat>,
}

impl Poly {
    fn zero() -> Poly {
        Poly::default()
    }

    fn constant(c: Rat) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Mono::new(), c);
        }
        p
    }

    fn one() -> Poly {
        Poly::constant(Rat::one())
    }

    fn atom(a: Atom) -> Poly {
        let mut m = Mono::new();
        m.insert(a, 1);
        let mut p = Poly::zero();
        p.terms.insert(m, Rat::one());
        p
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn as_constant(&self) -> Option<Rat> {
        if self.terms.is_empty() {
            return Some(Rat::zero());
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            if m.is_empty() {
                return Some(c.clone());
            }
        }
        None
    }

    fn add_term(&mut self, m: Mono, c: Rat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    fn neg(&self) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), -c.clone());
        }
        out
    }

    fn scale(&self, k: &Rat) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), c.clone() * k.clone());
        }
        out
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut m = m1.clone();
                for (a, e) in m2 {
                    *m.entry(a.clone()).or_insert(0) += e;
                }
                out.add_term(m, c1.clone() * c2.clone());
            }
        }
        out.reduce()
    }

    fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::one();
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Applies the rewrite rules cos(a)^2 -> 1 - sin(a)^2 and, for polynomial
    /// radicands, sqrt(a)^2 -> a, until no even powers remain.
    fn reduce(self) -> Poly {
        let mut cur = self;
        loop {
            let mut target: Option<(Mono, Rat, Atom)> = None;
            'outer: for (m, c) in &cur.terms {
                for (a, e) in m {
                    let reducible = match a {
                        Atom::Fun(Func::Cos, _) => *e >= 2,
                        Atom::Fun(Func::Sqrt, arg) => {
                            *e >= 2 && to_ratform(arg).den.as_constant().map_or(false, |c| c.is_one())
                        }
                        _ => false,
                    };
                    if reducible {
                        target = Some((m.clone(), c.clone(), a.clone()));
                        break 'outer;
                    }
                }
            }
            let Some((m, c, a)) = target else { return cur };
            cur.terms.remove(&m);
            let e = m[&a];
            let mut rest = m.clone();
            rest.remove(&a);
            let (subst, residual_pow) = match &a {
                Atom::Fun(Func::Cos, arg) => {
                    // cos^2 = 1 - sin^2
                    let sin2 = Poly::atom(Atom::Fun(Func::Sin, arg.clone()))
                        .mul(&Poly::atom(Atom::Fun(Func::Sin, arg.clone())));
                    (Poly::one().add(&sin2.neg()), e % 2)
                }
                Atom::Fun(Func::Sqrt, arg) => (to_ratform(arg).num, e % 2),
                _ => unreachable!(),
            };
            let mut term = Poly::zero();
            term.terms.insert(rest, c);
            let mut replacement = term.mul(&subst.pow(e / 2));
            if residual_pow == 1 {
                replacement = replacement.mul(&Poly::atom(a));
            }
            cur = cur.add(&replacement);
        }
    }

    /// Common monomial factor over all terms (empty when constant term present).
    fn content_mono(&self) -> Mono {
        let mut iter = self.terms.keys();
        let Some(first) = iter.next() else {
            return Mono::new();
        };
        let mut content = first.clone();
        for m in iter {
            let mut next = Mono::new();
            for (a, e) in &content {
                if let Some(e2) = m.get(a) {
                    next.insert(a.clone(), (*e).min(*e2));
                }
            }
            content = next;
            if content.is_empty() {
                break;
            }
        }
        content
    }

    fn div_mono(&self, m: &Mono) -> Poly {
        let mut out = Poly::zero();
        for (mono, c) in &self.terms {
            let mut nm = mono.clone();
            for (a, e) in m {
                let cur = nm.get_mut(a).expect("content divides every term");
                *cur -= e;
                if *cur == 0 {
                    nm.remove(a);
                }
            }
            out.terms.insert(nm, c.clone());
        }
        out
    }

    /// Leading coefficient in the deterministic term order.
    fn lead_coeff(&self) -> Option<Rat> {
        self.terms.values().next().cloned()
    }

    /// `Some(k)` when self == k * other.
    fn scalar_ratio(&self, other: &Poly) -> Option<Rat> {
        if self.terms.len() != other.terms.len() || other.is_zero() {
            return None;
        }
        let mut ratio: Option<Rat> = None;
        for ((m1, c1), (m2, c2)) in self.terms.iter().zip(other.terms.iter()) {
            if m1 != m2 {
                return None;
            }
            let r = c1.clone() / c2.clone();
            match &ratio {
                None => ratio = Some(r),
                Some(prev) if *prev == r => {}
                _ => return None,
            }
        }
        ratio
    }
}

#[derive(Clone, Debug)]
struct RatForm {
    num: Poly,
    den: Poly, // never the zero polynomial
}

impl RatForm {
    fn from_poly(p: Poly) -> RatForm {
        RatForm {
            num: p,
            den: Poly::one(),
        }
    }

    fn normalize(mut self) -> RatForm {
        assert!(!self.den.is_zero(), "zero denominator in canonical form");
        if self.num.is_zero() {
            return RatForm {
                num: Poly::zero(),
                den: Poly::one(),
            };
        }
        // cancel common monomial content
        let cn = self.num.content_mono();
        let cd = self.den.content_mono();
        let mut common = Mono::new();
        for (a, e) in &cn {
            if let Some(e2) = cd.get(a) {
                common.insert(a.clone(), (*e).min(*e2));
            }
        }
        if !common.is_empty() {
            self.num = self.num.div_mono(&common);
            self.den = self.den.div_mono(&common);
        }
        // proportional numerator collapses to a constant
        if let Some(k) = self.num.scalar_ratio(&self.den) {
            return RatForm {
                num: Poly::constant(k),
                den: Poly::one(),
            };
        }
        // make the denominator's leading coefficient one
        let lc = self.den.lead_coeff().unwrap();
        if !lc.is_one() {
            let inv = lc.recip();
            self.num = self.num.scale(&inv);
            self.den = self.den.scale(&inv);
        }
        self
    }

    fn add(&self, other: &RatForm) -> RatForm {
        if self.den == other.den {
            return RatForm {
                num: self.num.add(&other.num),
                den: self.den.clone(),
            }
            .normalize();
        }
        RatForm {
            num: self
                .num
                .mul(&other.den)
                .add(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
        .normalize()
    }

    fn mul(&self, other: &RatForm) -> RatForm {
        RatForm {
            num: self.num.mul(&other.num),
            den: self.den.mul(&other.den),
        }
        .normalize()
    }

    fn inv(&self) -> RatForm {
        assert!(!self.num.is_zero(), "symbolic division by structural zero");
        RatForm {
            num: self.den.clone(),
            den: self.num.clone(),
        }
        .normalize()
    }

    fn pow(&self, k: i32) -> RatForm {
        let base = if k < 0 { self.inv() } else { self.clone() };
        let mut out = RatForm::from_poly(Poly::one());
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }
}

fn rational_sqrt(c: &Rat) -> Option<Rat> {
    if c.is_negative() {
        return None;
    }
    let n = c.numer();
    let d = c.denom();
    let sn = n.sqrt();
    let sd = d.sqrt();
    if &(&sn * &sn) == n && &(&sd * &sd) == d {
        Some(Rat::new(sn, sd))
    } else {
        None
    }
}

fn fun_atom(f: Func, arg: Expr) -> RatForm {
    // constant folding on exact special values
    if let Expr::Const(c) = &arg {
        match f {
            Func::Sin | Func::Tan if c.is_zero() => return RatForm::from_poly(Poly::zero()),
            Func::Cos | Func::Sec | Func::Exp if c.is_zero() => {
                return RatForm::from_poly(Poly::one())
            }
            Func::Ln if c.is_one() => return RatForm::from_poly(Poly::zero()),
            Func::Sqrt => {
                if let Some(r) = rational_sqrt(c) {
                    return RatForm::from_poly(Poly::constant(r));
                }
            }
            _ => {}
        }
    }
    match f {
        Func::Tan => {
            let s = Poly::atom(Atom::Fun(Func::Sin, arg.clone()));
            let c = Poly::atom(Atom::Fun(Func::Cos, arg));
            RatForm { num: s, den: c }.normalize()
        }
        Func::Sec => {
            let c = Poly::atom(Atom::Fun(Func::Cos, arg));
            RatForm {
                num: Poly::one(),
                den: c,
            }
            .normalize()
        }
        other => RatForm::from_poly(Poly::atom(Atom::Fun(other, arg))),
    }
}

fn to_ratform(e: &Expr) -> RatForm {
    match e {
        Expr::Const(c) => RatForm::from_poly(Poly::constant(c.clone())),
        Expr::Var(v) => RatForm::from_poly(Poly::atom(Atom::Var(v.clone()))),
        Expr::Add(kids) => {
            let mut acc = RatForm::from_poly(Poly::zero());
            for k in kids {
                acc = acc.add(&to_ratform(k));
            }
            acc
        }
        Expr::Mul(kids) => {
            let mut acc = RatForm::from_poly(Poly::one());
            for k in kids {
                acc = acc.mul(&to_ratform(k));
            }
            acc
        }
        Expr::Pow(b, k) => to_ratform(b).pow(*k),
        Expr::Div(a, b) => to_ratform(a).mul(&to_ratform(b).inv()),
        Expr::Func(f, a) => fun_atom(*f, simplify(a)),
    }
}

fn mono_to_expr(m: &Mono, c: &Rat) -> Expr {
    let mut factors = Vec::new();
    if !c.is_one() || m.is_empty() {
        factors.push(Expr::Const(c.clone()));
    }
    for (a, e) in m {
        let base = match a {
            Atom::Var(v) => Expr::Var(v.clone()),
            Atom::Fun(f, arg) => Expr::func(*f, arg.clone()),
        };
        factors.push(base.pow(*e as i32));
    }
    Expr::mul_all(factors)
}

fn poly_to_expr(p: &Poly) -> Expr {
    if p.is_zero() {
        return Expr::zero();
    }
    let mut terms: Vec<Expr> = p.terms.iter().map(|(m, c)| mono_to_expr(m, c)).collect();
    terms.sort();
    Expr::add_all(terms)
}

/// Canonical form: semantically equal expression with commutative children
/// ordered, constants folded exactly, and structural zeros collapsed.
pub fn simplify(e: &Expr) -> Expr {
    let rf = to_ratform(e);
    if rf.num.is_zero() {
        return Expr::zero();
    }
    if let Some(c) = rf.den.as_constant() {
        debug_assert!(c.is_one());
        return poly_to_expr(&rf.num);
    }
    poly_to_expr(&rf.num).divide(poly_to_expr(&rf.den))
}

/// Exact structural zero test (sound: `true` implies the expression vanishes
/// identically wherever it is defined).
pub fn is_structurally_zero(e: &Expr) -> bool {
    to_ratform(e).num.is_zero()
}
