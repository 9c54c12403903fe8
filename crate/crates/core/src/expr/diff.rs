//! Symbolic partial differentiation.

use super::{Expr, Func};

impl Expr {
    /// Partial derivative with respect to the variable named `v`.
    pub fn diff(&self, v: &str) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(name) => {
                if name == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Add(kids) => Expr::add_all(kids.iter().map(|k| k.diff(v)).collect()),
            Expr::Mul(kids) => {
                // product rule over the whole factor list
                let mut terms = Vec::new();
                for (i, ki) in kids.iter().enumerate() {
                    let di = ki.diff(v);
                    if di.is_const_zero() {
                        continue;
                    }
                    let mut fs = vec![di];
                    for (j, kj) in kids.iter().enumerate() {
                        if i != j {
                            fs.push(kj.clone());
                        }
                    }
                    terms.push(Expr::mul_all(fs));
                }
                Expr::add_all(terms)
            }
            Expr::Pow(b, k) => {
                let db = b.diff(v);
                if db.is_const_zero() {
                    return Expr::zero();
                }
                Expr::mul_all(vec![Expr::num(*k as i64), b.as_ref().clone().pow(k - 1), db])
            }
            Expr::Div(a, b) => {
                let da = a.diff(v);
                let db = b.diff(v);
                if db.is_const_zero() {
                    return da.divide(b.as_ref().clone());
                }
                // (a'b - ab') / b^2
                let num = Expr::mul_all(vec![da, b.as_ref().clone()])
                    - Expr::mul_all(vec![a.as_ref().clone(), db]);
                num.divide(b.as_ref().clone().pow(2))
            }
            Expr::Func(f, a) => {
                let da = a.diff(v);
                if da.is_const_zero() {
                    return Expr::zero();
                }
                let arg = a.as_ref().clone();
                let outer = match f {
                    Func::Sin => Expr::func(Func::Cos, arg),
                    Func::Cos => Expr::func(Func::Sin, arg).neg(),
                    Func::Tan => Expr::func(Func::Sec, arg).pow(2),
                    Func::Sec => Expr::mul_all(vec![
                        Expr::func(Func::Sec, arg.clone()),
                        Expr::func(Func::Tan, arg),
                    ]),
                    Func::Exp => Expr::func(Func::Exp, arg),
                    Func::Ln => return da.divide(arg),
                    Func::Sqrt => {
                        return da.divide(Expr::mul_all(vec![
                            Expr::num(2),
                            Expr::func(Func::Sqrt, arg),
                        ]))
                    }
                };
                Expr::mul_all(vec![outer, da])
            }
        }
    }
}
