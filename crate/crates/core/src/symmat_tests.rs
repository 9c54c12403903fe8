use crate::config::Config;
use crate::expr::parse::parse_expr;
use crate::expr::{Expr, Point};
use crate::symmat::*;

const VARS: &[&str] = &[
    "x1", "x2", "x3", "y1", "y2", "th1", "th2", "F_f", "m", "l",
];

fn e(text: &str) -> Expr {
    parse_expr(text, VARS).unwrap()
}

fn mat(rows: &[&[&str]]) -> SymMatrix {
    let r: Vec<Vec<Expr>> = rows
        .iter()
        .map(|row| row.iter().map(|s| e(s)).collect())
        .collect();
    SymMatrix::from_rows(&r)
}

/// E of the academic 3x3 fixture.
fn e51() -> SymMatrix {
    mat(&[&["x2", "x1", "0"], &["0", "0", "0"], &["1", "0", "1"]])
}

fn x_a51() -> Point {
    Point::from_pairs([("x1", 1.0), ("x2", 0.0), ("x3", 0.0)])
}

/// E of the 7x7 manipulator fixture.
fn e52() -> SymMatrix {
    mat(&[
        &["1", "0", "0", "0", "0", "0", "0"],
        &["0", "m", "0", "0", "0", "-m*l*sin(th1)", "0"],
        &["0", "0", "1", "0", "0", "0", "0"],
        &["0", "0", "0", "m", "0", "m*l*cos(th1)", "0"],
        &["0", "0", "0", "0", "1", "0", "0"],
        &["0", "-sin(th1)", "0", "cos(th1)", "0", "l", "0"],
        &["0", "0", "0", "0", "0", "0", "0"],
    ])
}

fn xi_p52() -> Point {
    Point::from_pairs([
        ("x1", 0.0),
        ("x2", 0.0),
        ("y1", 0.0),
        ("y2", 0.0),
        ("th1", 0.0),
        ("th2", 0.0),
        ("F_f", 0.0),
        ("m", 1.0),
        ("l", 0.5),
    ])
}

#[test]
fn row_reduce_e51_rank_two_with_one_zero_row() {
    let cfg = Config::default();
    let rr = row_reduce(&e51(), &x_a51(), &cfg).unwrap();
    assert_eq!(rr.rank, 2);
    rr.verify(&e51()).unwrap();
}

#[test]
fn row_reduce_identity_is_trivial() {
    let cfg = Config::default();
    let id = SymMatrix::identity(3);
    let rr = row_reduce(&id, &x_a51(), &cfg).unwrap();
    assert_eq!(rr.rank, 3);
    assert_eq!(rr.q, SymMatrix::identity(3));
}

// The manipulator mass matrix is identically singular: the rotational row is
// a trig combination of the two translational rows, so rank E is 5 (not 6)
// with the all-zero constraint row making up the seventh. The elimination
// must discover the dependency exactly through sin^2+cos^2 = 1.
#[test]
fn row_reduce_e52_rank_five() {
    let cfg = Config::default();
    let at = xi_p52();
    let nr = numeric_rank(&e52(), &at, &cfg).unwrap();
    assert_eq!(nr.rank, 5);
    assert!(nr.constant_near);
    let rr = row_reduce(&e52(), &at, &cfg).unwrap();
    assert_eq!(rr.rank, 5);
    rr.verify(&e52()).unwrap();
}

#[test]
fn numeric_rank_of_e51_augmented_with_g() {
    let cfg = Config::default();
    let g = mat(&[&["1", "-1"], &["1", "1"], &["0", "0"]]);
    let eg = e51().hstack(&g);
    assert_eq!(numeric_rank(&eg, &x_a51(), &cfg).unwrap().rank, 3);
    assert_eq!(numeric_rank(&e51(), &x_a51(), &cfg).unwrap().rank, 2);
}

#[test]
fn numeric_rank_of_zero_matrix() {
    let cfg = Config::default();
    let z = SymMatrix::zeros(3, 4);
    assert_eq!(numeric_rank(&z, &x_a51(), &cfg).unwrap().rank, 0);
}

#[test]
fn kernel_of_e1_from_the_academic_example() {
    // E1 = [x2 x1 0; 1 0 1] has the kernel direction (x1, -x2, -x1)
    let cfg = Config::default();
    let e1 = mat(&[&["x2", "x1", "0"], &["1", "0", "1"]]);
    let k = kernel_basis(&e1, &x_a51(), &cfg).unwrap();
    assert_eq!((k.rows(), k.cols()), (3, 1));
    // proportionality: k x (x1,-x2,-x1) = 0 for all three 2x2 minors
    let v = [e("x1"), e("-x2"), e("-x1")];
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let minor = Expr::mul_all(vec![k.at(i, 0).clone(), v[j].clone()])
            - Expr::mul_all(vec![k.at(j, 0).clone(), v[i].clone()]);
        assert!(
            crate::expr::simplify::is_structurally_zero(&minor),
            "kernel not proportional to the expected direction"
        );
    }
}

#[test]
fn kernel_of_identity_is_empty() {
    let cfg = Config::default();
    let k = kernel_basis(&SymMatrix::identity(3), &x_a51(), &cfg).unwrap();
    assert_eq!(k.cols(), 0);
}

#[test]
fn right_inverse_of_coordinate_projection() {
    let cfg = Config::default();
    let a = mat(&[&["1", "0", "0"], &["0", "1", "0"]]);
    let ai = right_inverse(&a, &x_a51(), &cfg).unwrap();
    assert_eq!(ai, mat(&[&["1", "0"], &["0", "1"], &["0", "0"]]));
}

#[test]
fn right_inverse_of_e1_verifies_symbolically() {
    let cfg = Config::default();
    let e1 = mat(&[&["x2", "x1", "0"], &["1", "0", "1"]]);
    let ai = right_inverse(&e1, &x_a51(), &cfg).unwrap();
    let resid = e1.mul(&ai).sub(&SymMatrix::identity(2)).simplified();
    assert!(resid.is_structurally_zero());
}

#[test]
fn inverse_of_invertible_square_matrix() {
    let cfg = Config::default();
    let a = mat(&[&["1", "x1"], &["0", "2"]]);
    let ai = inverse(&a, &x_a51(), &cfg).unwrap();
    let resid = a.mul(&ai).sub(&SymMatrix::identity(2)).simplified();
    assert!(resid.is_structurally_zero());
}

#[test]
fn jacobian_of_the_academic_transformation() {
    let psi = [e("x1*x2"), e("x1 + x3"), e("-(x1)^3 + x2^2 + x3")];
    let j = SymMatrix::jacobian(&psi, &["x1", "x2", "x3"]);
    let expect = mat(&[
        &["x2", "x1", "0"],
        &["1", "0", "1"],
        &["-3*x1^2", "2*x2", "1"],
    ])
    .simplified();
    assert_eq!(j, expect);
}

#[test]
fn jacobian_of_identity_and_constant_maps() {
    let id = [e("x1"), e("x2")];
    assert_eq!(SymMatrix::jacobian(&id, &["x1", "x2"]), SymMatrix::identity(2));
    let c = [e("3"), e("1/2")];
    assert_eq!(SymMatrix::jacobian(&c, &["x1", "x2"]), SymMatrix::zeros(2, 2));
}

#[test]
fn row_reduce_aborts_on_uncertifiable_pivot() {
    let cfg = Config::default();
    // x1*1e-9 sits between tol_zero and tol_nonzero on the whole ball: the
    // zero test cannot decide it either way
    let a = mat(&[&["x1/1000000000"]]);
    let err = row_reduce(&a, &x_a51(), &cfg).unwrap_err();
    assert!(matches!(err, MatError::UncertifiablePivot { .. }));
}
