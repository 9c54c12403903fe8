//! Geometric reduction to the locally maximal controlled invariant
//! submanifold M*, the constant-rank condition, and construction of the
//! M*-restriction DACS.
//!
//! M_0 = X; M_k = { x in M_{k-1} | F(x) ∈ E(x) T_x M_{k-1} + Im G(x) }.
//! Each step computes a left annihilator W of [E P | G] (P spanning the
//! tangent space of the current constraint set) and turns W F into new
//! constraint functions. The iteration stops at a fixed point, or declares
//! the working point inadmissible when a constraint refuses to vanish there.

use crate::config::Config;
use crate::expr::simplify::{is_structurally_zero, simplify};
use crate::expr::{is_zero, Expr, Point, ZeroTest};
use crate::model::Dacs;
use crate::symmat::{kernel_basis, numeric_rank, row_reduce, MatError, SymMatrix};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("cannot certify constraint `{constraint}`: {reason}")]
    Uncertifiable { constraint: String, reason: String },
    #[error("constant-rank condition violated: {0}")]
    ConstantRank(String),
    #[error("cannot construct the restriction symbolically: {0}")]
    Restriction(String),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error("Newton projection onto the constraint set failed to converge")]
    Projection,
}

#[derive(Clone, Debug)]
pub struct ReductionStep {
    /// Step number k (the step that produced M_k).
    pub index: usize,
    pub new_constraints: Vec<Expr>,
    /// dim M_k.
    pub dim: usize,
}

#[derive(Clone, Debug)]
pub struct ReductionTrace {
    pub steps: Vec<ReductionStep>,
    /// Active constraint functions of M*, differentials independent at x_a.
    pub constraints: Vec<Expr>,
    pub k_star: usize,
    pub fixed_point: bool,
    pub admissible: bool,
    /// When inadmissible: the violated constraint and its value at x_a.
    pub violation: Option<(Expr, f64)>,
}

impl ReductionTrace {
    pub fn dim_m_star(&self, n: usize) -> usize {
        n - self.constraints.len()
    }
}

/// An explicit local parametrization of the constraint set: the dropped
/// variables are solved as expressions of the kept ones.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub kept: Vec<String>,
    pub dropped: Vec<String>,
    /// dropped variable -> expression over kept variables (and parameters).
    pub map: BTreeMap<String, Expr>,
}

impl Embedding {
    pub fn identity(states: &[String]) -> Embedding {
        Embedding {
            kept: states.to_vec(),
            dropped: vec![],
            map: BTreeMap::new(),
        }
    }

    /// The full state vector as expressions over the kept coordinates.
    pub fn state_exprs(&self, states: &[String]) -> Vec<Expr> {
        states
            .iter()
            .map(|s| {
                self.map
                    .get(s)
                    .cloned()
                    .unwrap_or_else(|| Expr::var(s.clone()))
            })
            .collect()
    }

    /// Maps a point of the reduced coordinates to the ambient space.
    pub fn embed_point(&self, z: &Point) -> Result<Point, crate::expr::EvalError> {
        let mut p = z.clone();
        for (v, e) in &self.map {
            p.set(v.clone(), e.eval(z)?);
        }
        Ok(p)
    }
}

/// Solves each constraint for one state variable in which it is linear with
/// a coefficient nonzero at the point; then closes the substitution so no
/// dropped variable remains on any right-hand side.
pub fn solve_constraints_linearly(
    constraints: &[Expr],
    states: &[String],
    at: &Point,
    cfg: &Config,
) -> Option<Embedding> {
    if constraints.is_empty() {
        return Some(Embedding::identity(states));
    }
    let mut dropped: Vec<String> = Vec::new();
    let mut map: BTreeMap<String, Expr> = BTreeMap::new();
    for c in constraints {
        let mut solved = false;
        for v in states {
            if dropped.contains(v) {
                continue;
            }
            let a = simplify(&c.diff(v));
            if a.variables().contains(v) {
                continue; // not linear in v
            }
            match a.eval(at) {
                Ok(val) if val.abs() > cfg.tol_nonzero => {}
                _ => continue,
            }
            // c = a*v + b  =>  v = -b/a
            let b = simplify(&(c.clone() - Expr::mul_all(vec![a.clone(), Expr::var(v.clone())])));
            let sol = simplify(&b.neg().divide(a));
            map.insert(v.clone(), sol);
            dropped.push(v.clone());
            solved = true;
            break;
        }
        if !solved {
            return None;
        }
    }
    // close the substitution: eliminate dropped variables from right sides
    for _ in 0..=dropped.len() {
        let mut changed = false;
        let snapshot = map.clone();
        for (_, e) in map.iter_mut() {
            if e.variables().iter().any(|v| snapshot.contains_key(v)) {
                *e = simplify(&e.substitute(&snapshot));
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if map
        .values()
        .any(|e| e.variables().iter().any(|v| map.contains_key(v)))
    {
        return None; // cyclic dependency
    }
    let kept: Vec<String> = states.iter().filter(|s| !dropped.contains(s)).cloned().collect();
    Some(Embedding { kept, dropped, map })
}

/// Gauss-Newton projection of `start` onto the zero set of the constraints
/// (states move, parameters stay fixed).
pub fn project_onto_constraints(
    constraints: &[Expr],
    states: &[String],
    start: &Point,
    cfg: &Config,
) -> Option<Point> {
    if constraints.is_empty() {
        return Some(start.clone());
    }
    let jac = SymMatrix::jacobian(constraints, states);
    let mut x = start.clone();
    for _ in 0..50 {
        let mut cvals = nalgebra::DVector::zeros(constraints.len());
        for (i, c) in constraints.iter().enumerate() {
            cvals[i] = c.eval(&x).ok()?;
        }
        if cvals.amax() < 1e-12 {
            return Some(x);
        }
        let j = jac.eval(&x).ok()?;
        let svd = j.svd(true, true);
        let dx = svd.solve(&cvals, 1e-12).ok()?;
        for (k, s) in states.iter().enumerate() {
            let cur = x.get(s)?;
            x.set(s.clone(), cur - dx[k]);
        }
    }
    let _ = cfg;
    None
}

/// Left annihilator rows of `b` (certified near `at`): W b = 0 with the rows
/// of W spanning the full annihilator.
fn left_annihilator(b: &SymMatrix, at: &Point, cfg: &Config) -> Result<SymMatrix, MatError> {
    let k = kernel_basis(&b.transpose(), at, cfg)?;
    Ok(k.transpose())
}

enum Implied {
    Yes,
    No,
    ViolatedAtPoint(f64),
}

/// Decides whether a candidate constraint already vanishes on the current
/// constraint set near x_a.
fn constraint_implied(
    cand: &Expr,
    constraints: &[Expr],
    d: &Dacs,
    cfg: &Config,
) -> Result<Implied, ReductionError> {
    if is_structurally_zero(cand) {
        return Ok(Implied::Yes);
    }
    // the candidate must vanish at x_a itself for admissibility
    match cand.eval(&d.point) {
        Ok(v) if v.abs() > cfg.tol_nonzero => return Ok(Implied::ViolatedAtPoint(v)),
        Ok(_) => {}
        Err(_) => {
            return Err(ReductionError::Uncertifiable {
                constraint: cand.to_string(),
                reason: "not evaluable at the working point".into(),
            })
        }
    }
    if let Some(embed) = solve_constraints_linearly(constraints, &d.states, &d.point, cfg) {
        // exact route: substitute the parametrization and zero-test on M
        let restricted = simplify(&cand.substitute(&embed.map));
        if is_structurally_zero(&restricted) {
            return Ok(Implied::Yes);
        }
        let mut z = Point::new();
        for s in embed.kept.iter() {
            z.set(s.clone(), d.point.get(s).unwrap());
        }
        for (pname, pval) in &d.params {
            z.set(pname.clone(), *pval);
        }
        return match is_zero(&restricted, &z, cfg) {
            ZeroTest::Zero { .. } => Ok(Implied::Yes),
            ZeroTest::NonzeroAt(_) => Ok(Implied::No),
            ZeroTest::Unknown { reason } => Err(ReductionError::Uncertifiable {
                constraint: cand.to_string(),
                reason,
            }),
        };
    }
    // numeric route: test on samples projected onto the constraint set
    let mut vanishes = true;
    let mut projected = 0usize;
    for s in cfg.samples_around(&d.point, cfg.resid_samples) {
        let Some(on_m) = project_onto_constraints(constraints, &d.states, &s, cfg) else {
            continue;
        };
        projected += 1;
        match cand.eval(&on_m) {
            Ok(v) if v.abs() > cfg.tol_nonzero => {
                vanishes = false;
                break;
            }
            Ok(v) if v.abs() >= cfg.tol_zero => vanishes = false,
            _ => {}
        }
    }
    if projected == 0 {
        return Err(ReductionError::Projection);
    }
    Ok(if vanishes { Implied::Yes } else { Implied::No })
}

/// Runs the geometric reduction from the working point of `d`.
pub fn reduce(d: &Dacs, cfg: &Config) -> Result<ReductionTrace, ReductionError> {
    let n = d.n_states();
    let mut constraints: Vec<Expr> = Vec::new();
    let mut steps: Vec<ReductionStep> = Vec::new();
    let mut k = 0usize;

    loop {
        k += 1;
        if k > n + 1 {
            return Err(ReductionError::Uncertifiable {
                constraint: "-".into(),
                reason: "reduction failed to reach a fixed point".into(),
            });
        }
        // tangent space of the current constraint set
        let p = if constraints.is_empty() {
            SymMatrix::identity(n)
        } else {
            let jac = SymMatrix::jacobian(&constraints, &d.states);
            kernel_basis(&jac, &d.point, cfg)?
        };
        let b = d.e.mul(&p).hstack(&d.g);
        let w = left_annihilator(&b, &d.point, cfg)?;
        let cand = w.mul(&d.f_col());

        let mut new_constraints = Vec::new();
        for i in 0..cand.rows() {
            let c = simplify(cand.at(i, 0));
            let mut all = constraints.clone();
            all.extend(new_constraints.iter().cloned());
            match constraint_implied(&c, &all, d, cfg)? {
                Implied::Yes => continue,
                Implied::ViolatedAtPoint(v) => {
                    return Ok(ReductionTrace {
                        steps,
                        constraints,
                        k_star: k - 1,
                        fixed_point: false,
                        admissible: false,
                        violation: Some((c, v)),
                    });
                }
                Implied::No => {
                    // differentials must stay independent at x_a
                    all.push(c.clone());
                    let jac = SymMatrix::jacobian(&all, &d.states);
                    let r = numeric_rank(&jac, &d.point, cfg)?;
                    if r.rank != all.len() {
                        return Err(ReductionError::Uncertifiable {
                            constraint: c.to_string(),
                            reason:
                                "new constraint is not implied but its differential is dependent at x_a"
                                    .into(),
                        });
                    }
                    new_constraints.push(c);
                }
            }
        }

        if new_constraints.is_empty() {
            return Ok(ReductionTrace {
                steps,
                constraints,
                k_star: k - 1,
                fixed_point: true,
                admissible: true,
                violation: None,
            });
        }
        constraints.extend(new_constraints.iter().cloned());
        steps.push(ReductionStep {
            index: k,
            new_constraints,
            dim: n - constraints.len(),
        });
    }
}

/// Result of the constant-rank check on M*.
#[derive(Clone, Debug)]
pub struct CrReport {
    pub r_star: usize,
    pub m_star: usize,
    pub n_star: usize,
    pub ok: bool,
    pub detail: String,
}

/// Checks dim E(x) T_x M* and dim(E T M* + Im G) for constancy at x_a and at
/// samples projected onto M*.
pub fn check_cr(d: &Dacs, trace: &ReductionTrace, cfg: &Config) -> Result<CrReport, ReductionError> {
    let n = d.n_states();
    let p = if trace.constraints.is_empty() {
        SymMatrix::identity(n)
    } else {
        let jac = SymMatrix::jacobian(&trace.constraints, &d.states);
        kernel_basis(&jac, &d.point, cfg)?
    };
    let ep = d.e.mul(&p);
    let epg = ep.hstack(&d.g);
    let r_star = numeric_rank(&ep, &d.point, cfg)?.rank;
    let r_eg = numeric_rank(&epg, &d.point, cfg)?.rank;
    let m_star = d.n_inputs() - (r_eg - r_star);
    let mut ok = true;
    let mut detail = String::new();
    for s in cfg.samples_around(&d.point, cfg.rank_samples) {
        let Some(on_m) = project_onto_constraints(&trace.constraints, &d.states, &s, cfg) else {
            continue;
        };
        let (Ok(mep), Ok(mepg)) = (ep.eval(&on_m), epg.eval(&on_m)) else {
            continue;
        };
        let r1 = crate::symmat::f64_matrix_rank(&mep, cfg.tol_rank);
        let r2 = crate::symmat::f64_matrix_rank(&mepg, cfg.tol_rank);
        if r1 != r_star || r2 != r_eg {
            ok = false;
            detail = format!(
                "rank jumped on M*: dim E TM* {r_star}->{r1}, dim(E TM* + Im G) {r_eg}->{r2}"
            );
            break;
        }
    }
    Ok(CrReport {
        r_star,
        m_star,
        n_star: trace.dim_m_star(n),
        ok,
        detail,
    })
}

/// The pinning feedback that froze the dependent inputs: in original input
/// order, u_original = alpha + beta * u_star.
#[derive(Clone, Debug)]
pub struct PinningFeedback {
    pub kept_inputs: Vec<String>,
    pub pinned_inputs: Vec<String>,
    pub alpha: Vec<Expr>,
    pub beta: SymMatrix,
}

/// The M*-restriction: a full-row-rank DACS on the kept coordinates plus the
/// data needed to map its solutions back to the original system.
#[derive(Clone, Debug)]
pub struct Restriction {
    pub dacs: Dacs,
    pub embedding: Embedding,
    pub pin: PinningFeedback,
    pub r_star: usize,
    pub n_star: usize,
    pub m_star: usize,
}

/// Builds the restriction of `d` to M* per the block-reduction recipe.
pub fn restrict(d: &Dacs, trace: &ReductionTrace, cfg: &Config) -> Result<Restriction, ReductionError> {
    if !trace.admissible {
        return Err(ReductionError::Restriction(
            "working point is not admissible".into(),
        ));
    }
    let embed = solve_constraints_linearly(&trace.constraints, &d.states, &d.point, cfg)
        .ok_or_else(|| {
            ReductionError::Restriction(
                "constraints are not linearly solvable for a coordinate subset".into(),
            )
        })?;
    let kept = embed.kept.clone();
    let n_star = kept.len();

    // working point in the kept coordinates (parameters stay bound)
    let mut z_point = Point::new();
    for s in &kept {
        z_point.set(s.clone(), d.point.get(s).unwrap());
    }
    for (pname, pval) in &d.params {
        z_point.set(pname.clone(), *pval);
    }

    // system data pulled back to M*: E1(z) = E(e(z)) * De(z), F(e(z)), G(e(z))
    let state_exprs = embed.state_exprs(&d.states);
    let je = SymMatrix::jacobian(&state_exprs, &kept);
    let e_on_m = d.e.substitute(&embed.map);
    let f_on_m = d.f_col().substitute(&embed.map);
    let g_on_m = d.g.substitute(&embed.map);
    let e1 = e_on_m.mul(&je);

    // block reduction of [E1 | F | G]
    let rr = row_reduce(&e1, &z_point, cfg)?;
    let r_star = rr.rank;
    let l = d.n_eqs();
    let m = d.n_inputs();
    let qf = rr.q.mul(&f_on_m);
    let qg = rr.q.mul(&g_on_m);
    let e_star = rr.rank_block();
    let f1 = SymMatrix::from_fn(r_star, 1, |i, _| qf.at(i, 0).clone());
    let g1 = SymMatrix::from_fn(r_star, m, |i, j| qg.at(i, j).clone());
    let fz = SymMatrix::from_fn(l - r_star, 1, |i, _| qf.at(r_star + i, 0).clone());
    let gz = SymMatrix::from_fn(l - r_star, m, |i, j| qg.at(r_star + i, j).clone());

    // split the zero-E rows into the pinning block (full-row-rank G part)
    // and pure consistency rows (which must vanish on M*)
    let rr2 = row_reduce(&gz, &z_point, cfg)?;
    let m_pinned = rr2.rank;
    let m_star = m - m_pinned;
    let g2 = rr2.rank_block();
    let qfz = rr2.q.mul(&fz);
    let f2 = SymMatrix::from_fn(m_pinned, 1, |i, _| qfz.at(i, 0).clone());
    for i in m_pinned..l - r_star {
        let resid = simplify(qfz.at(i, 0));
        match is_zero(&resid, &z_point, cfg) {
            ZeroTest::Zero { .. } => {}
            other => {
                return Err(ReductionError::Restriction(format!(
                    "consistency row `{resid}` does not vanish on M*: {other:?}"
                )))
            }
        }
    }

    // choose pinned input columns (rightmost preference keeps the leading
    // inputs as controls), certified invertible at the point
    let mut pinned_idx: Vec<usize> = Vec::new();
    if m_pinned > 0 {
        let gv = g2.eval(&z_point)?;
        let mut current: Option<nalgebra::DMatrix<f64>> = None;
        for j in (0..m).rev() {
            if pinned_idx.len() == m_pinned {
                break;
            }
            let col = gv.column(j).into_owned();
            let cand = match &current {
                None => nalgebra::DMatrix::from_columns(&[col.clone()]),
                Some(cur) => {
                    let mut cols: Vec<_> =
                        cur.column_iter().map(|c| c.into_owned()).collect();
                    cols.push(col.clone());
                    nalgebra::DMatrix::from_columns(&cols)
                }
            };
            if crate::symmat::f64_matrix_rank(&cand, cfg.tol_rank) == pinned_idx.len() + 1 {
                pinned_idx.push(j);
                current = Some(cand);
            }
        }
        pinned_idx.sort_unstable();
        if pinned_idx.len() != m_pinned {
            return Err(ReductionError::Restriction(
                "no input column subset makes the pinning block invertible".into(),
            ));
        }
    }
    let kept_idx: Vec<usize> = (0..m).filter(|j| !pinned_idx.contains(j)).collect();

    let take_cols = |mat: &SymMatrix, idx: &[usize]| -> SymMatrix {
        if idx.is_empty() {
            SymMatrix::zeros(mat.rows(), 0)
        } else {
            SymMatrix::from_columns(&idx.iter().map(|&j| mat.column(j)).collect::<Vec<_>>())
        }
    };
    let g2_pin = take_cols(&g2, &pinned_idx);
    let g2_kept = take_cols(&g2, &kept_idx);
    let g1_pin = take_cols(&g1, &pinned_idx);
    let g1_kept = take_cols(&g1, &kept_idx);

    let (f_star, g_star, alpha, beta);
    if m_pinned > 0 {
        let inv2 = crate::symmat::inverse(&g2_pin, &z_point, cfg)?;
        let corr = g1_pin.mul(&inv2);
        f_star = f1.sub(&corr.mul(&f2)).simplified();
        g_star = g1_kept.sub(&corr.mul(&g2_kept)).simplified();
        // original inputs from the restriction input: u = alpha + beta u*
        let alpha_pin = inv2.mul(&f2).scale(&Expr::num(-1)).simplified();
        let beta_pin = inv2.mul(&g2_kept).scale(&Expr::num(-1)).simplified();
        let mut a = vec![Expr::zero(); m];
        let mut bmat = SymMatrix::zeros(m, m_star);
        for (pos, &j) in kept_idx.iter().enumerate() {
            bmat.set(j, pos, Expr::one());
        }
        for (pos, &j) in pinned_idx.iter().enumerate() {
            a[j] = alpha_pin.at(pos, 0).clone();
            for t in 0..m_star {
                bmat.set(j, t, beta_pin.at(pos, t).clone());
            }
        }
        alpha = a;
        beta = bmat;
    } else {
        f_star = f1.simplified();
        g_star = g1.simplified();
        alpha = vec![Expr::zero(); m];
        beta = SymMatrix::identity(m);
    }

    let kept_input_names: Vec<String> = kept_idx.iter().map(|&j| d.inputs[j].clone()).collect();
    let pinned_input_names: Vec<String> = pinned_idx.iter().map(|&j| d.inputs[j].clone()).collect();

    let dacs = Dacs {
        name: format!("{}_restriction", d.name),
        states: kept.clone(),
        inputs: kept_input_names.clone(),
        params: d.params.clone(),
        e: e_star.simplified(),
        f: (0..r_star).map(|i| simplify(f_star.at(i, 0))).collect(),
        g: g_star,
        point: z_point,
    };

    Ok(Restriction {
        dacs,
        embedding: embed,
        pin: PinningFeedback {
            kept_inputs: kept_input_names,
            pinned_inputs: pinned_input_names,
            alpha,
            beta,
        },
        r_star,
        n_star,
        m_star,
    })
}
