//! Exact linear algebra over the rationals: ranks, nullspaces, subspace
//! arithmetic (image, preimage, sum, intersection) and small pencil
//! determinants. Used for the linear-DACS side of the toolkit where answers
//! must be exact.

use crate::expr::Rat;
use num::{One, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatMat {
    rows: usize,
    cols: usize,
    data: Vec<Rat>, // row-major
}

impl RatMat {
    pub fn new(rows: usize, cols: usize, data: Vec<Rat>) -> RatMat {
        assert_eq!(data.len(), rows * cols);
        RatMat { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rat) -> RatMat {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        RatMat { rows, cols, data }
    }

    pub fn from_i64(rows: &[&[i64]]) -> RatMat {
        let c = rows.first().map_or(0, |r| r.len());
        RatMat::from_fn(rows.len(), c, |i, j| Rat::from_integer(rows[i][j].into()))
    }

    pub fn zeros(rows: usize, cols: usize) -> RatMat {
        RatMat::from_fn(rows, cols, |_, _| Rat::zero())
    }

    pub fn identity(n: usize) -> RatMat {
        RatMat::from_fn(n, n, |i, j| if i == j { Rat::one() } else { Rat::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &Rat {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        self.data[i * self.cols + j] = v;
    }

    pub fn hstack(&self, other: &RatMat) -> RatMat {
        assert_eq!(self.rows, other.rows);
        RatMat::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self.at(i, j).clone()
            } else {
                other.at(i, j - self.cols).clone()
            }
        })
    }

    pub fn vstack(&self, other: &RatMat) -> RatMat {
        assert_eq!(self.cols, other.cols);
        RatMat::from_fn(self.rows + other.rows, self.cols, |i, j| {
            if i < self.rows {
                self.at(i, j).clone()
            } else {
                other.at(i - self.rows, j).clone()
            }
        })
    }

    pub fn mul(&self, other: &RatMat) -> RatMat {
        assert_eq!(self.cols, other.rows);
        RatMat::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = Rat::zero();
            for k in 0..self.cols {
                acc += self.at(i, k).clone() * other.at(k, j).clone();
            }
            acc
        })
    }

    pub fn neg(&self) -> RatMat {
        RatMat::from_fn(self.rows, self.cols, |i, j| -self.at(i, j).clone())
    }

    pub fn transpose(&self) -> RatMat {
        RatMat::from_fn(self.cols, self.rows, |i, j| self.at(j, i).clone())
    }

    pub fn scale(&self, k: &Rat) -> RatMat {
        RatMat::from_fn(self.rows, self.cols, |i, j| self.at(i, j).clone() * k.clone())
    }

    pub fn column(&self, j: usize) -> Vec<Rat> {
        (0..self.rows).map(|i| self.at(i, j).clone()).collect()
    }

    pub fn from_columns(n_rows: usize, cols: &[Vec<Rat>]) -> RatMat {
        RatMat::from_fn(n_rows, cols.len(), |i, j| cols[j][i].clone())
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        use num::ToPrimitive;
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| {
            self.at(i, j).to_f64().unwrap_or(f64::NAN)
        })
    }

    /// Reduced row echelon form; returns (rref, pivot columns).
    pub fn rref(&self) -> (RatMat, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0usize;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&r| !m.at(r, col).is_zero()) else {
                continue;
            };
            if p != row {
                for j in 0..m.cols {
                    let tmp = m.at(row, j).clone();
                    m.set(row, j, m.at(p, j).clone());
                    m.set(p, j, tmp);
                }
            }
            let inv = m.at(row, col).clone().recip();
            for j in 0..m.cols {
                let v = m.at(row, j).clone() * inv.clone();
                m.set(row, j, v);
            }
            for r in 0..m.rows {
                if r == row || m.at(r, col).is_zero() {
                    continue;
                }
                let f = m.at(r, col).clone();
                for j in 0..m.cols {
                    let v = m.at(r, j).clone() - f.clone() * m.at(row, j).clone();
                    m.set(r, j, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the nullspace as matrix columns.
    pub fn nullspace(&self) -> RatMat {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut cols = Vec::new();
        for &fc in &free {
            let mut v = vec![Rat::zero(); self.cols];
            v[fc] = Rat::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -r.at(i, fc).clone();
            }
            cols.push(v);
        }
        RatMat::from_columns(self.cols, &cols)
    }
}

/// A subspace of Q^n stored as a column-basis matrix (possibly zero columns).
#[derive(Clone, Debug)]
pub struct Subspace {
    /// n x d basis, columns independent.
    pub basis: RatMat,
}

impl Subspace {
    pub fn zero(n: usize) -> Subspace {
        Subspace {
            basis: RatMat::zeros(n, 0),
        }
    }

    pub fn full(n: usize) -> Subspace {
        Subspace {
            basis: RatMat::identity(n),
        }
    }

    /// Span of the columns of `m` (reduces to an independent set).
    pub fn span(m: &RatMat) -> Subspace {
        let n = m.rows();
        // pivot columns of m give an independent spanning subset
        let (_, pivots) = m.rref();
        // rref pivots are row-space pivots; for column space use transpose trick:
        // columns of m corresponding to pivot columns of rref(m) are independent
        let cols: Vec<Vec<Rat>> = pivots.iter().map(|&c| m.column(c)).collect();
        Subspace {
            basis: RatMat::from_columns(n, &cols),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn ambient(&self) -> usize {
        self.basis.rows()
    }

    pub fn contains_matrix(&self, m: &RatMat) -> bool {
        let stacked = self.basis.hstack(m);
        stacked.rank() == self.dim()
    }

    pub fn contains(&self, other: &Subspace) -> bool {
        self.contains_matrix(&other.basis)
    }

    pub fn equals(&self, other: &Subspace) -> bool {
        self.dim() == other.dim() && self.contains(other)
    }

    /// Sum of two subspaces.
    pub fn sum(&self, other: &Subspace) -> Subspace {
        Subspace::span(&self.basis.hstack(&other.basis))
    }

    /// Intersection via the kernel of [B1 | -B2].
    pub fn intersect(&self, other: &Subspace) -> Subspace {
        let n = self.ambient();
        if self.dim() == 0 || other.dim() == 0 {
            return Subspace::zero(n);
        }
        let stacked = self.basis.hstack(&other.basis.neg());
        let null = stacked.nullspace();
        // intersection vectors are B1 * (first-block coefficients)
        let d1 = self.dim();
        let coeffs = RatMat::from_fn(d1, null.cols(), |i, j| null.at(i, j).clone());
        let vecs = self.basis.mul(&coeffs);
        Subspace::span(&vecs)
    }

    /// Image A(S).
    pub fn image(&self, a: &RatMat) -> Subspace {
        Subspace::span(&a.mul(&self.basis))
    }

    /// Preimage A^{-1}(S) = {x : A x in S}.
    pub fn preimage(&self, a: &RatMat) -> Subspace {
        let n = a.cols();
        if self.dim() == 0 {
            return Subspace {
                basis: a.nullspace(),
            };
        }
        let stacked = a.hstack(&self.basis.neg());
        let null = stacked.nullspace();
        let coeffs = RatMat::from_fn(n, null.cols(), |i, j| null.at(i, j).clone());
        Subspace::span(&coeffs)
    }
}

/// Dense univariate polynomial with rational coefficients, ascending powers.
#[derive(Clone, Debug, PartialEq)]
pub struct RatPoly {
    pub coeffs: Vec<Rat>,
}

impl RatPoly {
    pub fn zero() -> RatPoly {
        RatPoly { coeffs: vec![] }
    }

    pub fn constant(c: Rat) -> RatPoly {
        if c.is_zero() {
            RatPoly::zero()
        } else {
            RatPoly { coeffs: vec![c] }
        }
    }

    /// c0 + c1*x.
    pub fn linear(c0: Rat, c1: Rat) -> RatPoly {
        let mut p = RatPoly {
            coeffs: vec![c0, c1],
        };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.last().map_or(false, |c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn add(&self, other: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![Rat::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i] += c.clone();
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            coeffs[i] += c.clone();
        }
        let mut p = RatPoly { coeffs };
        p.trim();
        p
    }

    pub fn neg(&self) -> RatPoly {
        RatPoly {
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
        }
    }

    pub fn mul(&self, other: &RatPoly) -> RatPoly {
        if self.is_zero() || other.is_zero() {
            return RatPoly::zero();
        }
        let mut coeffs = vec![Rat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a.clone() * b.clone();
            }
        }
        let mut p = RatPoly { coeffs };
        p.trim();
        p
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x.clone() + c.clone();
        }
        acc
    }

    /// Complex roots via the companion matrix (numeric).
    pub fn complex_roots(&self) -> Vec<num::Complex<f64>> {
        use num::ToPrimitive;
        let d = self.degree();
        if self.is_zero() || d == 0 {
            return vec![];
        }
        let lead = self.coeffs[d].clone();
        let mut comp = nalgebra::DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            let c = (self.coeffs[i].clone() / lead.clone()).to_f64().unwrap();
            comp[(i, d - 1)] = -c;
            if i + 1 < d {
                comp[(i + 1, i)] = 1.0;
            }
        }
        comp.complex_eigenvalues()
            .iter()
            .map(|z| num::Complex::new(z.re, z.im))
            .collect()
    }
}

/// Determinant of a k x k matrix of univariate polynomials given by an entry
/// accessor, by cofactor expansion (sizes stay small, k <= 6).
pub fn pencil_det(k: usize, entry: &dyn Fn(usize, usize) -> RatPoly) -> RatPoly {
    if k == 0 {
        return RatPoly::constant(Rat::one());
    }
    fn det_rec(k: usize, get: &dyn Fn(usize, usize) -> RatPoly, cols: &[usize]) -> RatPoly {
        if k == 1 {
            return get(0, cols[0]);
        }
        let row = k - 1; // expand along the last remaining row
        let mut acc = RatPoly::zero();
        for (pos, &c) in cols.iter().enumerate() {
            let minor_cols: Vec<usize> = cols.iter().copied().filter(|&cc| cc != c).collect();
            let term = get(row, c).mul(&det_rec(k - 1, get, &minor_cols));
            if (row + pos) % 2 == 0 {
                acc = acc.add(&term);
            } else {
                acc = acc.add(&term.neg());
            }
        }
        acc
    }
    let idx: Vec<usize> = (0..k).collect();
    det_rec(k, entry, &idx)
}
