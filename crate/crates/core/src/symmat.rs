//! Dense matrices over the symbolic expression field: products, Jacobians,
//! point-certified Gaussian elimination, kernel bases, right inverses and
//! numeric rank at a working point.

use crate::config::Config;
use crate::expr::simplify::{is_structurally_zero, simplify};
use crate::expr::{is_zero, Expr, Point, ZeroTest};
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum MatError {
    #[error("cannot certify rank near the working point: entry ({row},{col}) = `{entry}` has an undecidable zero test")]
    UncertifiablePivot {
        row: usize,
        col: usize,
        entry: String,
    },
    #[error("matrix evaluation failed at the working point: {0}")]
    Eval(String),
    #[error("symbolic rank {symbolic} disagrees with numeric rank {numeric} at the working point")]
    RankMismatch { symbolic: usize, numeric: usize },
    #[error("matrix does not have full row rank at the working point")]
    NotFullRowRank,
    #[error("residual check failed: {0}")]
    Residual(String),
    #[error("dimension mismatch: {0}")]
    Dim(String),
}

/// Rectangular matrix of expressions.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Expr>, // row-major
}

impl SymMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Expr>) -> SymMatrix {
        assert_eq!(data.len(), rows * cols, "shape does not match data length");
        SymMatrix { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Expr) -> SymMatrix {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        SymMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> SymMatrix {
        SymMatrix::from_fn(rows, cols, |_, _| Expr::zero())
    }

    pub fn identity(n: usize) -> SymMatrix {
        SymMatrix::from_fn(n, n, |i, j| if i == j { Expr::one() } else { Expr::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &Expr {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr) {
        self.data[i * self.cols + j] = e;
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> SymMatrix {
        SymMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn simplified(&self) -> SymMatrix {
        self.map(simplify)
    }

    pub fn transpose(&self) -> SymMatrix {
        SymMatrix::from_fn(self.cols, self.rows, |i, j| self.at(j, i).clone())
    }

    pub fn column(&self, j: usize) -> Vec<Expr> {
        (0..self.rows).map(|i| self.at(i, j).clone()).collect()
    }

    pub fn row(&self, i: usize) -> Vec<Expr> {
        (0..self.cols).map(|j| self.at(i, j).clone()).collect()
    }

    pub fn from_columns(cols: &[Vec<Expr>]) -> SymMatrix {
        assert!(!cols.is_empty());
        let rows = cols[0].len();
        SymMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i].clone())
    }

    pub fn from_rows(rows: &[Vec<Expr>]) -> SymMatrix {
        assert!(!rows.is_empty());
        let cols = rows[0].len();
        SymMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j].clone())
    }

    pub fn col_vector(v: &[Expr]) -> SymMatrix {
        SymMatrix::from_fn(v.len(), 1, |i, _| v[i].clone())
    }

    pub fn hstack(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.rows, other.rows);
        SymMatrix::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self.at(i, j).clone()
            } else {
                other.at(i, j - self.cols).clone()
            }
        })
    }

    pub fn vstack(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.cols, other.cols);
        SymMatrix::from_fn(self.rows + other.rows, self.cols, |i, j| {
            if i < self.rows {
                self.at(i, j).clone()
            } else {
                other.at(i - self.rows, j).clone()
            }
        })
    }

    pub fn mul(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        SymMatrix::from_fn(self.rows, other.cols, |i, j| {
            let terms: Vec<Expr> = (0..self.cols)
                .map(|k| Expr::mul_all(vec![self.at(i, k).clone(), other.at(k, j).clone()]))
                .collect();
            simplify(&Expr::add_all(terms))
        })
    }

    pub fn mul_vec(&self, v: &[Expr]) -> Vec<Expr> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let terms: Vec<Expr> = (0..self.cols)
                    .map(|k| Expr::mul_all(vec![self.at(i, k).clone(), v[k].clone()]))
                    .collect();
                simplify(&Expr::add_all(terms))
            })
            .collect()
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        SymMatrix::from_fn(self.rows, self.cols, |i, j| {
            self.at(i, j).clone() + other.at(i, j).clone()
        })
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        SymMatrix::from_fn(self.rows, self.cols, |i, j| {
            self.at(i, j).clone() - other.at(i, j).clone()
        })
    }

    pub fn scale(&self, k: &Expr) -> SymMatrix {
        self.map(|e| Expr::mul_all(vec![k.clone(), e.clone()]))
    }

    /// Substitutes variables in every entry.
    pub fn substitute(&self, bindings: &std::collections::BTreeMap<String, Expr>) -> SymMatrix {
        self.map(|e| e.substitute(bindings))
    }

    /// Evaluates every entry at a point.
    pub fn eval(&self, at: &Point) -> Result<DMatrix<f64>, MatError> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self
                    .at(i, j)
                    .eval(at)
                    .map_err(|e| MatError::Eval(format!("entry ({i},{j}): {e}")))?;
            }
        }
        Ok(m)
    }

    /// True when every entry simplifies to the zero polynomial.
    pub fn is_structurally_zero(&self) -> bool {
        self.data.iter().all(is_structurally_zero)
    }

    /// Jacobian of a vector of expressions with respect to `vars`.
    pub fn jacobian<S: AsRef<str>>(map: &[Expr], vars: &[S]) -> SymMatrix {
        SymMatrix::from_fn(map.len(), vars.len(), |i, j| {
            simplify(&map[i].diff(vars[j].as_ref()))
        })
    }
}

/// Numeric rank of an evaluated matrix with a constancy flag from nearby
/// samples. Rank disagreement across samples clears `constant_near`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NumericRank {
    pub rank: usize,
    pub constant_near: bool,
}

/// Rank of an evaluated matrix by singular-value thresholding.
pub fn f64_matrix_rank(m: &DMatrix<f64>, tol_rel: f64) -> usize {
    f64_rank(m, tol_rel)
}

fn f64_rank(m: &DMatrix<f64>, tol_rel: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|s| **s > tol_rel * smax)
        .count()
}

/// Rank by singular-value thresholding at `at`, sampled at nearby points for
/// the constant-rank flag. Samples where evaluation fails are skipped.
pub fn numeric_rank(a: &SymMatrix, at: &Point, cfg: &Config) -> Result<NumericRank, MatError> {
    let base = f64_rank(&a.eval(at)?, cfg.tol_rank);
    let mut constant = true;
    for p in cfg.samples_around(at, cfg.rank_samples) {
        if let Ok(m) = a.eval(&p) {
            if f64_rank(&m, cfg.tol_rank) != base {
                constant = false;
            }
        }
    }
    Ok(NumericRank {
        rank: base,
        constant_near: constant,
    })
}

/// Result of point-certified row reduction: `q * input = reduced`, with
/// `reduced` of the form [full-row-rank block; zero rows].
#[derive(Clone, Debug)]
pub struct RowReduction {
    /// Accumulated invertible row operations.
    pub q: SymMatrix,
    /// Row echelon result; first `rank` rows form the full-row-rank block.
    pub reduced: SymMatrix,
    /// Pivot column of each of the first `rank` rows, increasing.
    pub pivot_cols: Vec<usize>,
    /// Pivot expressions with their nonzero-at-point evidence.
    pub pivots: Vec<(Expr, Point)>,
    pub rank: usize,
}

/// Gaussian elimination over the expression field. Pivots must be certified
/// nonzero at the working point; zero rows must certify as zero near it.
/// Entries that are neither certifiable nonzero at the point nor zero nearby
/// abort the reduction.
pub fn row_reduce(a: &SymMatrix, at: &Point, cfg: &Config) -> Result<RowReduction, MatError> {
    row_reduce_with(a, at, cfg, &mut |candidates| {
        // Prefer exact nonzero constants, then the largest magnitude at the point.
        let mut best: Option<(usize, f64, bool)> = None;
        for &(row, mag, is_const) in candidates {
            let better = match best {
                None => true,
                Some((_, bmag, bconst)) => (is_const && !bconst) || (is_const == bconst && mag > bmag),
            };
            if better {
                best = Some((row, mag, is_const));
            }
        }
        best.map(|(r, _, _)| r)
    })
}

/// Row reduction with a caller-chosen pivot rule. The chooser receives
/// `(row, |value at point|, is_nonzero_constant)` candidates that are all
/// certified nonzero at the working point.
pub fn row_reduce_with(
    a: &SymMatrix,
    at: &Point,
    cfg: &Config,
    choose: &mut dyn FnMut(&[(usize, f64, bool)]) -> Option<usize>,
) -> Result<RowReduction, MatError> {
    let l = a.rows();
    let n = a.cols();
    let mut work = a.simplified();
    let mut q = SymMatrix::identity(l);
    let mut pivot_cols = Vec::new();
    let mut pivots = Vec::new();
    let mut next_row = 0usize;

    for col in 0..n {
        if next_row == l {
            break;
        }
        // classify entries of this column below the processed block
        let mut candidates = Vec::new();
        let mut undecided: Option<usize> = None;
        for row in next_row..l {
            let entry = work.at(row, col);
            if is_structurally_zero(entry) {
                continue;
            }
            let val_at_point = entry.eval(at);
            match val_at_point {
                Ok(v) if v.abs() > cfg.tol_nonzero => {
                    let is_const = matches!(entry, Expr::Const(_));
                    candidates.push((row, v.abs(), is_const));
                }
                _ => match is_zero(entry, at, cfg) {
                    ZeroTest::Zero { .. } => {}
                    _ => undecided = Some(row),
                },
            }
        }
        if candidates.is_empty() {
            if let Some(row) = undecided {
                return Err(MatError::UncertifiablePivot {
                    row,
                    col,
                    entry: work.at(row, col).to_string(),
                });
            }
            continue; // column is zero below the processed block
        }
        let prow = choose(&candidates).expect("chooser must pick from nonempty candidates");
        // swap pivot row up
        if prow != next_row {
            for j in 0..n {
                let tmp = work.at(next_row, j).clone();
                work.set(next_row, j, work.at(prow, j).clone());
                work.set(prow, j, tmp);
            }
            for j in 0..l {
                let tmp = q.at(next_row, j).clone();
                q.set(next_row, j, q.at(prow, j).clone());
                q.set(prow, j, tmp);
            }
        }
        let pivot = work.at(next_row, col).clone();
        pivots.push((pivot.clone(), at.clone()));
        // eliminate the column below the pivot
        for row in next_row + 1..l {
            let entry = work.at(row, col).clone();
            if is_structurally_zero(&entry) {
                continue;
            }
            let factor = simplify(&entry.divide(pivot.clone()));
            for j in 0..n {
                let newv = work.at(row, j).clone()
                    - Expr::mul_all(vec![factor.clone(), work.at(next_row, j).clone()]);
                work.set(row, j, simplify(&newv));
            }
            for j in 0..l {
                let newv = q.at(row, j).clone()
                    - Expr::mul_all(vec![factor.clone(), q.at(next_row, j).clone()]);
                q.set(row, j, simplify(&newv));
            }
        }
        pivot_cols.push(col);
        next_row += 1;
    }

    let rank = next_row;
    // certify the remaining rows as zero near the point
    for row in rank..l {
        for jcol in 0..n {
            let entry = work.at(row, jcol);
            match is_zero(entry, at, cfg) {
                ZeroTest::Zero { .. } => {}
                _ => {
                    return Err(MatError::UncertifiablePivot {
                        row,
                        col: jcol,
                        entry: entry.to_string(),
                    })
                }
            }
        }
    }

    // cross-check against the numeric oracle at the point
    let nr = numeric_rank(a, at, cfg)?;
    if nr.rank != rank {
        return Err(MatError::RankMismatch {
            symbolic: rank,
            numeric: nr.rank,
        });
    }
    // Q must stay invertible at the point
    let qv = q.eval(at)?;
    if f64_rank(&qv, cfg.tol_rank) != l {
        return Err(MatError::Residual(
            "row-operation matrix lost invertibility at the point".into(),
        ));
    }

    Ok(RowReduction {
        q,
        reduced: work,
        pivot_cols,
        pivots,
        rank,
    })
}

impl RowReduction {
    /// First `rank` rows of the reduction (the full-row-rank block).
    pub fn rank_block(&self) -> SymMatrix {
        SymMatrix::from_fn(self.rank, self.reduced.cols(), |i, j| {
            self.reduced.at(i, j).clone()
        })
    }

    /// Checks `q * a == reduced` structurally.
    pub fn verify(&self, a: &SymMatrix) -> Result<(), MatError> {
        let residual = self.q.mul(a).sub(&self.reduced).simplified();
        if residual.is_structurally_zero() {
            Ok(())
        } else {
            Err(MatError::Residual(
                "Q*A - reduced is not structurally zero".into(),
            ))
        }
    }
}

/// Kernel basis of `a` near `at`: columns span ker a(x) locally. The matrix is
/// first row-reduced; free columns generate the basis by back-substitution.
/// Columns are ordered by increasing free-column index.
pub fn kernel_basis(a: &SymMatrix, at: &Point, cfg: &Config) -> Result<SymMatrix, MatError> {
    let rr = row_reduce(a, at, cfg)?;
    let n = a.cols();
    let r = rr.rank;
    let u = rr.rank_block();
    let pivot_cols = rr.pivot_cols.clone();
    let free_cols: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
    if free_cols.is_empty() {
        return Ok(SymMatrix::zeros(n, 0));
    }
    let mut cols = Vec::new();
    for &fc in &free_cols {
        let mut v = vec![Expr::zero(); n];
        v[fc] = Expr::one();
        // back-substitute pivot variables from the bottom up; pivots right of
        // the free column stay zero
        for i in (0..r).rev() {
            let pc = pivot_cols[i];
            if pc > fc {
                continue;
            }
            let mut acc = u.at(i, fc).clone();
            for &pck in pivot_cols.iter().skip(i + 1) {
                acc = acc + Expr::mul_all(vec![u.at(i, pck).clone(), v[pck].clone()]);
            }
            v[pc] = simplify(&acc.neg().divide(u.at(i, pc).clone()));
        }
        cols.push(v);
    }
    let basis = SymMatrix::from_columns(&cols);
    // invariant: the full-rank block annihilates the basis structurally
    let resid = u.mul(&basis);
    if !resid.is_structurally_zero() {
        return Err(MatError::Residual(
            "kernel basis residual A*K is not structurally zero".into(),
        ));
    }
    // the dropped rows are certified zero near the point; check numerically
    let av = a.eval(at)?;
    let bv0 = basis.eval(at)?;
    let prod = av * &bv0;
    if prod.iter().any(|v| v.abs() > cfg.tol_nonzero) {
        return Err(MatError::Residual(
            "kernel basis residual A*K is numerically nonzero at the point".into(),
        ));
    }
    // columns independent at the point
    let bv = basis.eval(at)?;
    if f64_rank(&bv, cfg.tol_rank) != free_cols.len() {
        return Err(MatError::Residual(
            "kernel basis columns are dependent at the point".into(),
        ));
    }
    Ok(basis)
}

/// Right inverse of a full-row-rank matrix: solves `a * x = I` with free
/// variables pinned (zero by default), then verifies `a * x - I == 0`
/// structurally.
pub fn right_inverse(a: &SymMatrix, at: &Point, cfg: &Config) -> Result<SymMatrix, MatError> {
    right_inverse_with_free(a, at, cfg, None)
}

/// Right inverse with explicit values for the free (non-pivot) rows; used to
/// randomize the explicitation choice.
pub fn right_inverse_with_free(
    a: &SymMatrix,
    at: &Point,
    cfg: &Config,
    free_values: Option<&dyn Fn(usize, usize) -> Expr>,
) -> Result<SymMatrix, MatError> {
    let rr = row_reduce(a, at, cfg)?;
    if rr.rank != a.rows() {
        return Err(MatError::NotFullRowRank);
    }
    let r = a.rows();
    let n = a.cols();
    let u = rr.rank_block();
    // solve U * X = Q column by column; free rows of X are pinned
    let mut x = SymMatrix::zeros(n, r);
    for col in 0..r {
        if let Some(f) = free_values {
            for frow in (0..n).filter(|c| !rr.pivot_cols.contains(c)) {
                x.set(frow, col, f(frow, col));
            }
        }
        for i in (0..r).rev() {
            let pc = rr.pivot_cols[i];
            let mut acc = rr.q.at(i, col).clone();
            for j in 0..n {
                if j == pc {
                    continue;
                }
                acc = acc - Expr::mul_all(vec![u.at(i, j).clone(), x.at(j, col).clone()]);
            }
            x.set(pc, col, simplify(&acc.divide(u.at(i, pc).clone())));
        }
    }
    let resid = a.mul(&x).sub(&SymMatrix::identity(r)).simplified();
    if !resid.is_structurally_zero() {
        return Err(MatError::Residual(
            "right inverse residual A*A^+ - I is not structurally zero".into(),
        ));
    }
    Ok(x)
}

/// Symbolic inverse of a square matrix certified invertible at the point.
pub fn inverse(a: &SymMatrix, at: &Point, cfg: &Config) -> Result<SymMatrix, MatError> {
    if a.rows() != a.cols() {
        return Err(MatError::Dim("inverse needs a square matrix".into()));
    }
    let inv = right_inverse(a, at, cfg)?;
    // for square full-rank matrices the right inverse is the inverse
    let resid = inv.mul(a).sub(&SymMatrix::identity(a.rows())).simplified();
    if !resid.is_structurally_zero() {
        return Err(MatError::Residual(
            "inverse residual A^-1*A - I is not structurally zero".into(),
        ));
    }
    Ok(inv)
}
