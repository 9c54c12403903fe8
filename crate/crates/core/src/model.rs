//! Data model and file ingestion for nonlinear DACSs E(x)ẋ = F(x) + G(x)u,
//! linear DACSs Eẋ = Hx + Lu, and external-feedback-equivalence witnesses.
//!
//! The system file format is line oriented with bracketed sections:
//!
//! ```text
//! [system] name=example
//! [states] x1 x2 x3
//! [inputs] u1 u2
//! [params] m=1 l=0.5
//! [point] x1=1 x2=0 x3=0
//! [E]
//! x2, x1, 0
//! ...
//! [F]
//! 0
//! ...
//! [G]
//! 1, -1
//! ...
//! ```
//!
//! `#` starts a comment. A witness file carries [Q], [psi], [alpha_u],
//! [beta_u] sections for equivalence verification runs.

use crate::config::Config;
use crate::expr::parse::parse_expr;
use crate::expr::simplify::simplify;
use crate::expr::{Expr, Point, Rat};
use crate::ratmat::RatMat;
use crate::symmat::{numeric_rank, SymMatrix};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("dimension mismatch: {0}")]
    Dim(String),
    #[error("missing section [{0}]")]
    MissingSection(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T, ModelError> {
    Err(ModelError::Parse {
        line,
        msg: msg.into(),
    })
}

/// A nonlinear differential-algebraic control system with a working point.
#[derive(Clone, Debug)]
pub struct Dacs {
    pub name: String,
    pub states: Vec<String>,
    pub inputs: Vec<String>,
    pub params: Vec<(String, f64)>,
    pub e: SymMatrix,
    pub f: Vec<Expr>,
    pub g: SymMatrix,
    /// Binds every state and parameter.
    pub point: Point,
}

impl Dacs {
    pub fn n_eqs(&self) -> usize {
        self.e.rows()
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    /// Names usable inside system expressions (states and parameters).
    pub fn expr_names(&self) -> Vec<String> {
        let mut v = self.states.clone();
        v.extend(self.params.iter().map(|(p, _)| p.clone()));
        v
    }

    pub fn validate(&self, cfg: &Config) -> Result<(), ModelError> {
        let l = self.e.rows();
        let n = self.states.len();
        let m = self.inputs.len();
        if self.e.cols() != n {
            return Err(ModelError::Dim(format!(
                "[E] has {} columns but {} states are declared",
                self.e.cols(),
                n
            )));
        }
        if self.f.len() != l {
            return Err(ModelError::Dim(format!(
                "[F] has {} rows but [E] has {} rows",
                self.f.len(),
                l
            )));
        }
        if self.g.rows() != l {
            return Err(ModelError::Dim(format!(
                "[G] has {} rows but [E] has {} rows",
                self.g.rows(),
                l
            )));
        }
        if self.g.cols() != m {
            return Err(ModelError::Dim(format!(
                "[G] has {} columns but {} inputs are declared",
                self.g.cols(),
                m
            )));
        }
        for s in &self.states {
            if self.point.get(s).is_none() {
                return Err(ModelError::Validation(format!(
                    "working point does not bind state `{s}`"
                )));
            }
        }
        // everything must evaluate at the working point
        self.e
            .eval(&self.point)
            .map_err(|e| ModelError::Validation(format!("[E] not evaluable at the point: {e}")))?;
        self.g
            .eval(&self.point)
            .map_err(|e| ModelError::Validation(format!("[G] not evaluable at the point: {e}")))?;
        for (i, fi) in self.f.iter().enumerate() {
            fi.eval(&self.point).map_err(|e| {
                ModelError::Validation(format!("[F] row {} not evaluable at the point: {e}", i + 1))
            })?;
        }
        let _ = cfg;
        Ok(())
    }

    /// F as a column matrix.
    pub fn f_col(&self) -> SymMatrix {
        SymMatrix::col_vector(&self.f)
    }

    /// Extracts constant matrices when the system is linear: E constant,
    /// F = Hx with constant H, G constant.
    pub fn try_to_linear(&self) -> Option<LinearDacs> {
        let n = self.n_states();
        let as_const = |e: &Expr| -> Option<Rat> {
            match simplify(e) {
                Expr::Const(c) => Some(c),
                _ => None,
            }
        };
        let mut emat = RatMat::zeros(self.e.rows(), n);
        for i in 0..self.e.rows() {
            for j in 0..n {
                emat.set(i, j, as_const(self.e.at(i, j))?);
            }
        }
        let mut h = RatMat::zeros(self.e.rows(), n);
        for (i, fi) in self.f.iter().enumerate() {
            // F_i must be a linear form in the states
            let mut residual = simplify(fi);
            for (j, s) in self.states.iter().enumerate() {
                let coeff = simplify(&fi.diff(s));
                let c = as_const(&coeff)?;
                h.set(i, j, c.clone());
                residual = simplify(
                    &(residual - Expr::mul_all(vec![Expr::Const(c), Expr::var(s.clone())])),
                );
            }
            if !residual.is_const_zero() {
                return None;
            }
        }
        let mut lmat = RatMat::zeros(self.g.rows(), self.g.cols());
        for i in 0..self.g.rows() {
            for j in 0..self.g.cols() {
                lmat.set(i, j, as_const(self.g.at(i, j))?);
            }
        }
        Some(LinearDacs {
            e: emat,
            h,
            l: lmat,
        })
    }
}

/// A linear DACS Eẋ = Hx + Lu with exact rational entries.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearDacs {
    pub e: RatMat,
    pub h: RatMat,
    pub l: RatMat,
}

impl LinearDacs {
    pub fn n_eqs(&self) -> usize {
        self.e.rows()
    }

    pub fn n_states(&self) -> usize {
        self.e.cols()
    }

    pub fn n_inputs(&self) -> usize {
        self.l.cols()
    }

    /// Wraps the linear system as a nonlinear [`Dacs`] with working point 0
    /// (which lies in every subspace, hence is always admissible for
    /// controllable-candidate pencils).
    pub fn to_dacs(&self, name: &str) -> Dacs {
        let n = self.n_states();
        let states: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        let inputs: Vec<String> = (1..=self.n_inputs()).map(|i| format!("u{i}")).collect();
        let rat_expr = |r: &Rat| Expr::Const(r.clone());
        let e = SymMatrix::from_fn(self.e.rows(), n, |i, j| rat_expr(self.e.at(i, j)));
        let g = SymMatrix::from_fn(self.l.rows(), self.l.cols(), |i, j| rat_expr(self.l.at(i, j)));
        let f: Vec<Expr> = (0..self.h.rows())
            .map(|i| {
                Expr::add_all(
                    (0..n)
                        .map(|j| {
                            Expr::mul_all(vec![
                                rat_expr(self.h.at(i, j)),
                                Expr::var(states[j].clone()),
                            ])
                        })
                        .collect(),
                )
            })
            .collect();
        let point = Point::from_pairs(states.iter().map(|s| (s.clone(), 0.0)));
        Dacs {
            name: name.to_string(),
            states,
            inputs,
            params: vec![],
            e,
            f,
            g,
            point,
        }
    }
}

/// Witness for external feedback equivalence: Q, diffeomorphism psi and the
/// input feedback u = alpha_u + beta_u * ũ, all over the source variables.
#[derive(Clone, Debug)]
pub struct ExFbWitness {
    pub q: SymMatrix,
    pub psi: Vec<Expr>,
    pub alpha_u: Vec<Expr>,
    pub beta_u: SymMatrix,
}

// ---------------------------------------------------------------------------
// section-file parsing
// ---------------------------------------------------------------------------

pub(crate) struct Section {
    pub name: String,
    pub lines: Vec<(usize, String)>,
    pub header_line: usize,
}

impl Section {
    /// Value of a `key=value` token anywhere in the section body.
    pub fn attr(&self, key: &str) -> Option<String> {
        for (_, line) in &self.lines {
            for tok in line.split_whitespace() {
                if let Some((k, v)) = tok.split_once('=') {
                    if k == key {
                        return Some(v.to_string());
                    }
                }
            }
        }
        None
    }
}

pub(crate) fn parse_sections(text: &str) -> Result<Vec<Section>, ModelError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let Some(close) = rest.find(']') else {
                return perr(lineno, "unterminated section header");
            };
            let name = rest[..close].trim().to_string();
            let mut section = Section {
                name,
                lines: Vec::new(),
                header_line: lineno,
            };
            // text after `]` is ordinary section content on the same line
            let inline = rest[close + 1..].trim();
            if !inline.is_empty() {
                section.lines.push((lineno, inline.to_string()));
            }
            sections.push(section);
        } else {
            match sections.last_mut() {
                Some(s) => s.lines.push((lineno, line.to_string())),
                None => return perr(lineno, "content before any [section] header"),
            }
        }
    }
    Ok(sections)
}

fn find<'a>(sections: &'a [Section], name: &str) -> Option<&'a Section> {
    sections.iter().find(|s| s.name == name)
}

fn names_from(section: &Section) -> Vec<String> {
    section
        .lines
        .iter()
        .flat_map(|(_, l)| l.split_whitespace())
        .map(|s| s.to_string())
        .collect()
}

fn const_value(text: &str, line: usize) -> Result<f64, ModelError> {
    let e = parse_expr::<&str>(text, &[])
        .map_err(|pe| ModelError::Parse {
            line,
            msg: pe.to_string(),
        })?;
    e.eval(&Point::new())
        .map_err(|ee| ModelError::Parse {
            line,
            msg: ee.to_string(),
        })
}

fn assignments(section: &Section) -> Result<Vec<(String, f64)>, ModelError> {
    let mut out = Vec::new();
    for (line, text) in &section.lines {
        for tok in text.split_whitespace() {
            let Some((k, v)) = tok.split_once('=') else {
                return perr(*line, format!("expected name=value, found `{tok}`"));
            };
            out.push((k.trim().to_string(), const_value(v, *line)?));
        }
    }
    Ok(out)
}

fn expr_rows(
    section: &Section,
    names: &[String],
    expected_cols: Option<usize>,
) -> Result<Vec<Vec<Expr>>, ModelError> {
    let mut rows = Vec::new();
    for (line, text) in &section.lines {
        let mut row = Vec::new();
        for cell in text.split(',') {
            let e = parse_expr(cell.trim(), names).map_err(|pe| ModelError::Parse {
                line: *line,
                msg: format!("in [{}]: {}", section.name, pe),
            })?;
            row.push(e);
        }
        if let Some(c) = expected_cols {
            if row.len() != c {
                return perr(
                    *line,
                    format!(
                        "[{}] row has {} entries, expected {}",
                        section.name,
                        row.len(),
                        c
                    ),
                );
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Loads and validates a system file.
pub fn load_system(text: &str, cfg: &Config) -> Result<Dacs, ModelError> {
    let sections = parse_sections(text)?;
    let name = find(&sections, "system")
        .and_then(|s| s.attr("name"))
        .unwrap_or_else(|| "unnamed".to_string());
    let states = names_from(
        find(&sections, "states").ok_or_else(|| ModelError::MissingSection("states".into()))?,
    );
    let inputs = find(&sections, "inputs").map(names_from).unwrap_or_default();
    let params = match find(&sections, "params") {
        Some(s) => assignments(s)?,
        None => Vec::new(),
    };
    let point_pairs = assignments(
        find(&sections, "point").ok_or_else(|| ModelError::MissingSection("point".into()))?,
    )?;

    let mut expr_names = states.clone();
    expr_names.extend(params.iter().map(|(p, _)| p.clone()));

    let e_sec = find(&sections, "E").ok_or_else(|| ModelError::MissingSection("E".into()))?;
    let e_rows = expr_rows(e_sec, &expr_names, Some(states.len()))?;
    if e_rows.is_empty() {
        return perr(e_sec.header_line, "[E] has no rows");
    }
    let l = e_rows.len();
    let f_sec = find(&sections, "F").ok_or_else(|| ModelError::MissingSection("F".into()))?;
    let f_rows = expr_rows(f_sec, &expr_names, Some(1))?;
    let g_rows = match find(&sections, "G") {
        Some(g_sec) => expr_rows(g_sec, &expr_names, Some(inputs.len()))?,
        None if inputs.is_empty() => Vec::new(),
        None => return Err(ModelError::MissingSection("G".into())),
    };

    let mut point = Point::new();
    for (k, v) in &point_pairs {
        if !states.contains(k) {
            return Err(ModelError::Validation(format!(
                "[point] binds `{k}` which is not a declared state"
            )));
        }
        point.set(k.clone(), *v);
    }
    for (k, v) in &params {
        point.set(k.clone(), *v);
    }

    let e = SymMatrix::from_rows(&e_rows);
    let f: Vec<Expr> = f_rows.into_iter().map(|mut r| r.remove(0)).collect();
    let g = if inputs.is_empty() {
        SymMatrix::zeros(l, 0)
    } else {
        SymMatrix::from_rows(&g_rows)
    };

    let dacs = Dacs {
        name,
        states,
        inputs,
        params,
        e,
        f,
        g,
        point,
    };
    dacs.validate(cfg)?;
    Ok(dacs)
}

/// Loads a witness file ([Q], [psi], [alpha_u], [beta_u]) over the variables
/// of the source system `a`.
pub fn load_witness(text: &str, a: &Dacs) -> Result<ExFbWitness, ModelError> {
    let sections = parse_sections(text)?;
    let names = a.expr_names();
    let q_rows = expr_rows(
        find(&sections, "Q").ok_or_else(|| ModelError::MissingSection("Q".into()))?,
        &names,
        Some(a.n_eqs()),
    )?;
    let psi_rows = expr_rows(
        find(&sections, "psi").ok_or_else(|| ModelError::MissingSection("psi".into()))?,
        &names,
        Some(1),
    )?;
    let alpha_rows = expr_rows(
        find(&sections, "alpha_u").ok_or_else(|| ModelError::MissingSection("alpha_u".into()))?,
        &names,
        Some(1),
    )?;
    let beta_rows = expr_rows(
        find(&sections, "beta_u").ok_or_else(|| ModelError::MissingSection("beta_u".into()))?,
        &names,
        Some(a.n_inputs()),
    )?;
    if q_rows.len() != a.n_eqs() {
        return Err(ModelError::Dim("[Q] must be l x l".into()));
    }
    if psi_rows.len() != a.n_states() {
        return Err(ModelError::Dim("[psi] must list n expressions".into()));
    }
    if alpha_rows.len() != a.n_inputs() || beta_rows.len() != a.n_inputs() {
        return Err(ModelError::Dim(
            "[alpha_u]/[beta_u] must match the input count".into(),
        ));
    }
    Ok(ExFbWitness {
        q: SymMatrix::from_rows(&q_rows),
        psi: psi_rows.into_iter().map(|mut r| r.remove(0)).collect(),
        alpha_u: alpha_rows.into_iter().map(|mut r| r.remove(0)).collect(),
        beta_u: SymMatrix::from_rows(&beta_rows),
    })
}

fn write_matrix(out: &mut String, name: &str, m: &SymMatrix) {
    out.push_str(&format!("[{name}]\n"));
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| m.at(i, j).to_string()).collect();
        out.push_str(&row.join(", "));
        out.push('\n');
    }
}

/// Serializes a system back to the file format (restrictions written by the
/// CLI are loadable again through [`load_system`]).
pub fn system_to_string(d: &Dacs) -> String {
    let mut out = String::new();
    out.push_str(&format!("[system] name={}\n", d.name));
    out.push_str(&format!("[states] {}\n", d.states.join(" ")));
    if !d.inputs.is_empty() {
        out.push_str(&format!("[inputs] {}\n", d.inputs.join(" ")));
    }
    if !d.params.is_empty() {
        let ps: Vec<String> = d
            .params
            .iter()
            .map(|(k, v)| format!("{k}={}", fmt_f64(*v)))
            .collect();
        out.push_str(&format!("[params] {}\n", ps.join(" ")));
    }
    let pts: Vec<String> = d
        .states
        .iter()
        .map(|s| format!("{s}={}", fmt_f64(d.point.get(s).unwrap_or(0.0))))
        .collect();
    out.push_str(&format!("[point] {}\n", pts.join(" ")));
    write_matrix(&mut out, "E", &d.e);
    out.push_str("[F]\n");
    for fi in &d.f {
        out.push_str(&format!("{fi}\n"));
    }
    write_matrix(&mut out, "G", &d.g);
    out
}

pub(crate) fn fmt_f64(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

// ---------------------------------------------------------------------------
// external feedback equivalence verification
// ---------------------------------------------------------------------------

/// Outcome of one relation check.
#[derive(Clone, Debug)]
pub enum CheckStatus {
    PassStructural,
    PassNumeric { max_residual: f64 },
    Fail { residual: f64, at: Point },
    Unknown { reason: String },
}

impl CheckStatus {
    pub fn passed(&self) -> bool {
        matches!(self, CheckStatus::PassStructural | CheckStatus::PassNumeric { .. })
    }
}

#[derive(Clone, Debug)]
pub struct RelationCheck {
    pub name: String,
    pub status: CheckStatus,
}

#[derive(Clone, Debug)]
pub struct EquivReport {
    pub relations: Vec<RelationCheck>,
    /// Ranks of E and [E,G] agree at corresponding points (a necessary
    /// invariant of ex-fb equivalence).
    pub rank_invariants_ok: bool,
}

impl EquivReport {
    pub fn all_passed(&self) -> bool {
        self.relations.iter().all(|r| r.status.passed()) && self.rank_invariants_ok
    }

    pub fn any_failed(&self) -> bool {
        self.relations
            .iter()
            .any(|r| matches!(r.status, CheckStatus::Fail { .. }))
            || !self.rank_invariants_ok
    }
}

/// Evaluates a residual matrix: structural zero first, then sampling.
pub(crate) fn residual_status(
    residual: &SymMatrix,
    at: &Point,
    cfg: &Config,
) -> CheckStatus {
    if residual.simplified().is_structurally_zero() {
        return CheckStatus::PassStructural;
    }
    let mut points = vec![at.clone()];
    points.extend(cfg.samples_around(at, cfg.resid_samples));
    let mut max_resid = 0.0f64;
    let mut worst = at.clone();
    let mut evaluated = 0usize;
    for p in &points {
        if let Ok(m) = residual.eval(p) {
            evaluated += 1;
            let r = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if r > max_resid {
                max_resid = r;
                worst = p.clone();
            }
        }
    }
    if evaluated == 0 {
        return CheckStatus::Unknown {
            reason: "residual not evaluable at any sample".into(),
        };
    }
    if max_resid < cfg.tol_resid {
        CheckStatus::PassNumeric {
            max_residual: max_resid,
        }
    } else {
        CheckStatus::Fail {
            residual: max_resid,
            at: worst,
        }
    }
}

/// Checks the three ex-fb-equivalence relations between `a` and `b` under
/// witness `w`:
///   Ẽ∘ψ · Dψ = Q·E,  F̃∘ψ = Q(F + G α),  G̃∘ψ = Q G β.
pub fn verify_ex_fb_equivalence(
    a: &Dacs,
    b: &Dacs,
    w: &ExFbWitness,
    cfg: &Config,
) -> Result<EquivReport, ModelError> {
    if (a.n_eqs(), a.n_states(), a.n_inputs()) != (b.n_eqs(), b.n_states(), b.n_inputs()) {
        return Err(ModelError::Dim(
            "ex-fb equivalence requires equal (l, n, m)".into(),
        ));
    }
    let at = &a.point;
    let mut relations = Vec::new();

    // witness certificates: Q, Dpsi, beta invertible at the point
    let dpsi = SymMatrix::jacobian(&w.psi, &a.states);
    for (name, m, dim) in [
        ("Q invertible", &w.q, a.n_eqs()),
        ("Dpsi invertible", &dpsi, a.n_states()),
        ("beta_u invertible", &w.beta_u, a.n_inputs()),
    ] {
        let ok = numeric_rank(m, at, cfg)
            .map(|r| r.rank == dim)
            .unwrap_or(false);
        relations.push(RelationCheck {
            name: name.to_string(),
            status: if ok {
                CheckStatus::PassNumeric { max_residual: 0.0 }
            } else {
                CheckStatus::Fail {
                    residual: f64::INFINITY,
                    at: at.clone(),
                }
            },
        });
    }

    // compose b's data with psi
    let mut bind = BTreeMap::new();
    for (i, s) in b.states.iter().enumerate() {
        bind.insert(s.clone(), w.psi[i].clone());
    }
    let eb = b.e.substitute(&bind);
    let fb = SymMatrix::col_vector(&b.f).substitute(&bind);
    let gb = b.g.substitute(&bind);

    // E relation: Q E - (E_b ∘ psi) Dpsi
    let r1 = w.q.mul(&a.e).sub(&eb.mul(&dpsi));
    relations.push(RelationCheck {
        name: "E relation".into(),
        status: residual_status(&r1, at, cfg),
    });

    // F relation: Q (F + G alpha) - F_b ∘ psi
    let alpha = SymMatrix::col_vector(&w.alpha_u);
    let fa = a.f_col();
    let r2 = w.q.mul(&fa.add(&a.g.mul(&alpha))).sub(&fb);
    relations.push(RelationCheck {
        name: "F relation".into(),
        status: residual_status(&r2, at, cfg),
    });

    // G relation: Q G beta - G_b ∘ psi
    let r3 = w.q.mul(&a.g).mul(&w.beta_u).sub(&gb);
    relations.push(RelationCheck {
        name: "G relation".into(),
        status: residual_status(&r3, at, cfg),
    });

    // rank invariance of E and [E,G] at corresponding points
    let ra = numeric_rank(&a.e, at, cfg).ok();
    let rag = numeric_rank(&a.e.hstack(&a.g), at, cfg).ok();
    let mut b_point = Point::new();
    for (i, s) in b.states.iter().enumerate() {
        match w.psi[i].eval(at) {
            Ok(v) => b_point.set(s.clone(), v),
            Err(_) => {}
        }
    }
    for (k, v) in b.params.iter() {
        b_point.set(k.clone(), *v);
    }
    let rb = numeric_rank(&b.e, &b_point, cfg).ok();
    let rbg = numeric_rank(&b.e.hstack(&b.g), &b_point, cfg).ok();
    let rank_invariants_ok = match (ra, rb, rag, rbg) {
        (Some(x), Some(y), Some(xw), Some(yw)) => x.rank == y.rank && xw.rank == yw.rank,
        _ => false,
    };

    Ok(EquivReport {
        relations,
        rank_invariants_ok,
    })
}
