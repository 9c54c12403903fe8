use crate::config::Config;
use crate::expr::simplify::{is_structurally_zero, simplify};
use crate::expr::{Expr, Point};
use crate::model::Dacs;
use crate::model_tests::load_fixture;
use crate::reduction::*;
use crate::symmat::SymMatrix;

#[test]
fn academic_example_reduces_to_the_whole_neighborhood() {
    let cfg = Config::default();
    let d = load_fixture("example51.dacs");
    let t = reduce(&d, &cfg).unwrap();
    assert!(t.admissible);
    assert!(t.fixed_point);
    assert!(t.constraints.is_empty());
    assert_eq!(t.k_star, 0);
}

#[test]
fn manipulator_reduction_finds_the_two_constraints() {
    let cfg = Config::default();
    let d = load_fixture("example52.dacs");
    let t = reduce(&d, &cfg).unwrap();
    assert!(t.admissible);
    assert_eq!(t.k_star, 2);
    assert_eq!(t.steps.len(), 2);
    // step 1: x1 - y1; step 2: x2 - y2 (up to sign/scale)
    assert_eq!(t.steps[0].new_constraints.len(), 1);
    assert_eq!(t.steps[1].new_constraints.len(), 1);
    let c1 = &t.steps[0].new_constraints[0];
    let c2 = &t.steps[1].new_constraints[0];
    let names = ["x1", "x2", "y1", "y2", "th1", "th2", "F_f", "m", "l"];
    let e1 = crate::expr::parse::parse_expr("x1 - y1", &names).unwrap();
    let e2 = crate::expr::parse::parse_expr("x2 - y2", &names).unwrap();
    assert!(proportional(c1, &e1), "step 1 constraint was {c1}");
    assert!(proportional(c2, &e2), "step 2 constraint was {c2}");
    assert_eq!(t.dim_m_star(7), 5);
}

fn proportional(a: &Expr, b: &Expr) -> bool {
    // a = k*b for a nonzero rational k
    for k_num in [1i64, -1, 2, -2, 3, -3] {
        for k_den in [1i64, 2, 3] {
            let k = Expr::constant(crate::expr::ratio(k_num, k_den));
            if is_structurally_zero(&(a.clone() - Expr::mul_all(vec![k, b.clone()]))) {
                return true;
            }
        }
    }
    false
}

#[test]
fn unsatisfiable_constant_forcing_is_inadmissible() {
    let cfg = Config::default();
    let d = Dacs {
        name: "bad".into(),
        states: vec!["x1".into(), "x2".into(), "x3".into()],
        inputs: vec![],
        params: vec![],
        e: SymMatrix::zeros(3, 3),
        f: vec![Expr::zero(), Expr::zero(), Expr::one()],
        g: SymMatrix::zeros(3, 0),
        point: Point::from_pairs([("x1", 0.0), ("x2", 0.0), ("x3", 0.0)]),
    };
    let t = reduce(&d, &cfg).unwrap();
    assert!(!t.admissible);
    let (c, v) = t.violation.unwrap();
    assert!(simplify(&c).is_const_one());
    assert_eq!(v, 1.0);
}

#[test]
fn cr_check_on_the_academic_example() {
    let cfg = Config::default();
    let d = load_fixture("example51.dacs");
    let t = reduce(&d, &cfg).unwrap();
    let cr = check_cr(&d, &t, &cfg).unwrap();
    assert!(cr.ok, "{}", cr.detail);
    assert_eq!((cr.r_star, cr.m_star, cr.n_star), (2, 1, 3));
}

#[test]
fn cr_check_on_the_manipulator() {
    let cfg = Config::default();
    let d = load_fixture("example52.dacs");
    let t = reduce(&d, &cfg).unwrap();
    let cr = check_cr(&d, &t, &cfg).unwrap();
    assert!(cr.ok, "{}", cr.detail);
    assert_eq!((cr.r_star, cr.m_star, cr.n_star), (4, 1, 5));
}

#[test]
fn cr_is_trivial_for_invertible_e() {
    let cfg = Config::default();
    let names = ["x1", "x2"];
    let d = Dacs {
        name: "ode".into(),
        states: vec!["x1".into(), "x2".into()],
        inputs: vec!["u1".into()],
        params: vec![],
        e: SymMatrix::identity(2),
        f: vec![
            crate::expr::parse::parse_expr("x2", &names).unwrap(),
            Expr::zero(),
        ],
        g: SymMatrix::from_rows(&[vec![Expr::zero()], vec![Expr::one()]]),
        point: Point::from_pairs([("x1", 0.0), ("x2", 0.0)]),
    };
    let t = reduce(&d, &cfg).unwrap();
    assert!(t.constraints.is_empty());
    let cr = check_cr(&d, &t, &cfg).unwrap();
    assert_eq!((cr.r_star, cr.m_star), (2, 1));
}

#[test]
fn restriction_of_the_academic_example_matches_the_row_space() {
    let cfg = Config::default();
    let d = load_fixture("example51.dacs");
    let t = reduce(&d, &cfg).unwrap();
    let r = restrict(&d, &t, &cfg).unwrap();
    assert_eq!((r.r_star, r.n_star, r.m_star), (2, 3, 1));
    assert_eq!(r.dacs.states, vec!["x1", "x2", "x3"]);
    // the restriction [E*|F*|G*] must span the same row space as the paper's
    // display: E* = [x2 x1 0; 1 0 1], F* = (0, x2^2-x1^3+x3), G* = (2, 0)
    let names = ["x1", "x2", "x3"];
    let p = |s: &str| crate::expr::parse::parse_expr(s, &names).unwrap();
    let paper = SymMatrix::from_rows(&[
        vec![p("x2"), p("x1"), p("0"), p("0"), p("2")],
        vec![p("1"), p("0"), p("1"), p("x2^2 - x1^3 + x3"), p("0")],
    ]);
    let mine = r
        .dacs
        .e
        .hstack(&SymMatrix::col_vector(&r.dacs.f))
        .hstack(&r.dacs.g);
    assert_same_row_space(&mine, &paper, &d.point, &cfg);
}

#[test]
fn restriction_of_the_manipulator_matches_the_paper() {
    let cfg = Config::default();
    let d = load_fixture("example52.dacs");
    let t = reduce(&d, &cfg).unwrap();
    let r = restrict(&d, &t, &cfg).unwrap();
    assert_eq!((r.r_star, r.n_star, r.m_star), (4, 5, 1));
    // the paper keeps (y1, y2, th1, th2, F_f) and the first input
    assert_eq!(r.dacs.states, vec!["y1", "y2", "th1", "th2", "F_f"]);
    assert_eq!(r.pin.kept_inputs, vec!["F_x"]);
    assert_eq!(r.pin.pinned_inputs, vec!["F_y"]);
    // row space comparison against Eq. (19)
    let names = ["y1", "y2", "th1", "th2", "F_f", "m", "l"];
    let p = |s: &str| crate::expr::parse::parse_expr(s, &names).unwrap();
    let paper = SymMatrix::from_rows(&[
        vec![p("1"), p("0"), p("0"), p("0"), p("0"), p("y2"), p("0")],
        vec![
            p("0"),
            p("m"),
            p("0"),
            p("m*l*cos(th1)"),
            p("0"),
            p("F_f/l*sec(th1) + m*l*th2^2*sin(th1)"),
            p("tan(th1)"),
        ],
        vec![p("0"), p("0"), p("1"), p("0"), p("0"), p("th2"), p("0")],
        vec![
            p("0"),
            p("m"),
            p("0"),
            p("-m*l*sin(th1)"),
            p("0"),
            p("m*l*th2^2*cos(th1)"),
            p("1"),
        ],
    ]);
    let mine = r
        .dacs
        .e
        .hstack(&SymMatrix::col_vector(&r.dacs.f))
        .hstack(&r.dacs.g);
    assert_same_row_space(&mine, &paper, &r.dacs.point, &cfg);
}

/// Two full-row-rank matrices describe the same DACS up to a Q-transformation
/// iff their row spaces agree wherever both are defined.
fn assert_same_row_space(a: &SymMatrix, b: &SymMatrix, at: &Point, cfg: &Config) {
    assert_eq!(a.rows(), b.rows());
    assert_eq!(a.cols(), b.cols());
    let stacked = a.vstack(b);
    let mut pts = vec![at.clone()];
    pts.extend(cfg.samples_around(at, 8));
    for p in pts {
        let (Ok(ma), Ok(ms)) = (a.eval(&p), stacked.eval(&p)) else {
            continue;
        };
        let ra = crate::symmat::f64_matrix_rank(&ma, cfg.tol_rank);
        let rs = crate::symmat::f64_matrix_rank(&ms, cfg.tol_rank);
        assert_eq!(ra, a.rows(), "left factor lost row rank");
        assert_eq!(rs, ra, "row spaces differ at {p:?}");
    }
}

#[test]
fn restriction_of_an_ode_is_the_system_itself() {
    let cfg = Config::default();
    let names = ["x1", "x2"];
    let p = |s: &str| crate::expr::parse::parse_expr(s, &names).unwrap();
    let d = Dacs {
        name: "ode".into(),
        states: vec!["x1".into(), "x2".into()],
        inputs: vec!["u1".into()],
        params: vec![],
        e: SymMatrix::identity(2),
        f: vec![p("x2"), p("x1*x2")],
        g: SymMatrix::from_rows(&[vec![p("0")], vec![p("1 + x1^2")]]),
        point: Point::from_pairs([("x1", 0.0), ("x2", 0.0)]),
    };
    let t = reduce(&d, &cfg).unwrap();
    let r = restrict(&d, &t, &cfg).unwrap();
    assert_eq!(r.m_star, 1);
    assert_eq!(r.dacs.e.simplified(), d.e.simplified());
    assert_eq!(
        simplify(&(r.dacs.f[1].clone() - d.f[1].clone())),
        Expr::zero()
    );
}

#[test]
fn solutions_of_the_restriction_satisfy_the_original_residual() {
    // mapped-back points of M* satisfy the original constraints
    let cfg = Config::default();
    let d = load_fixture("example52.dacs");
    let t = reduce(&d, &cfg).unwrap();
    let r = restrict(&d, &t, &cfg).unwrap();
    let z = r.dacs.point.clone();
    let x = r.embedding.embed_point(&z).unwrap();
    for c in &t.constraints {
        assert!(c.eval(&x).unwrap().abs() < 1e-12);
    }
}
