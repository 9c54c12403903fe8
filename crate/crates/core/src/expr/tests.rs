use super::parse::parse_expr;
use super::simplify::{is_structurally_zero, simplify};
use super::*;
use crate::config::Config;

fn p(text: &str) -> Expr {
    parse_expr(text, &["x1", "x2", "x3", "th1", "th2", "y1", "m", "l", "t"]).unwrap()
}

fn pt(pairs: &[(&str, f64)]) -> Point {
    Point::from_pairs(pairs.iter().map(|(k, v)| (*k, *v)))
}

#[test]
fn parses_product_of_parameters_and_trig() {
    let e = p("m*l*th2^2*cos(th1)");
    let at = pt(&[("m", 1.0), ("l", 0.5), ("th1", 0.3), ("th2", 2.0)]);
    let v = e.eval(&at).unwrap();
    assert!((v - 0.5 * 4.0 * 0.3f64.cos()).abs() < 1e-14);
    assert!(matches!(e, Expr::Mul(_)));
}

#[test]
fn parses_zero_literal() {
    assert!(p("0").is_const_zero());
}

#[test]
fn parses_difference_vanishing_on_diagonal() {
    let e = p("x1 - y1");
    let v = e.eval(&pt(&[("x1", 2.0), ("y1", 2.0)])).unwrap();
    assert_eq!(v, 0.0);
}

#[test]
fn rejects_unknown_identifier_with_position() {
    let err = parse_expr("x1 + bogus", &["x1"]).unwrap_err();
    assert_eq!(err.pos, 5);
    assert!(err.msg.contains("bogus"));
}

#[test]
fn rejects_syntax_error_with_position() {
    let err = parse_expr("x1 + ", &["x1"]).unwrap_err();
    assert!(err.pos >= 4);
}

#[test]
fn decimal_literals_are_exact_rationals() {
    let e = p("0.1");
    assert_eq!(e, Expr::Const(ratio(1, 10)));
}

#[test]
fn derivative_of_product_base_case() {
    let d = simplify(&p("x1*x2").diff("x1"));
    assert_eq!(d, p("x2"));
}

#[test]
fn derivative_of_trig_difference() {
    let d = simplify(&p("sin(th1)-cos(th1)").diff("th1"));
    assert_eq!(d, simplify(&p("cos(th1)+sin(th1)")));
}

#[test]
fn derivative_of_cubic_matches_paper_chain_term() {
    let d = simplify(&p("-(x1)^3+(x2)^2+x3").diff("x1"));
    assert_eq!(d, simplify(&p("-3*(x1)^2")));
}

#[test]
fn simplify_pythagorean_identity() {
    assert!(is_structurally_zero(&p("sin(t)^2+cos(t)^2-1")));
    assert_eq!(simplify(&p("sin(t)^2+cos(t)^2-1")), Expr::zero());
}

#[test]
fn simplify_commuted_difference() {
    assert_eq!(simplify(&p("x1*x2 - x2*x1")), Expr::zero());
}

#[test]
fn simplify_self_cancellation_with_parameters() {
    assert_eq!(
        simplify(&p("m*l*th2^2*cos(th1) - m*l*th2^2*cos(th1)")),
        Expr::zero()
    );
}

#[test]
fn simplify_folds_tan_sec_into_sin_cos() {
    // sec * cos = 1
    assert!(is_structurally_zero(&p("sec(th1)*cos(th1) - 1")));
    // tan * cos = sin
    assert!(is_structurally_zero(&p("tan(th1)*cos(th1) - sin(th1)")));
}

#[test]
fn simplify_reduces_even_sqrt_powers() {
    assert!(is_structurally_zero(&p("sqrt(2)^2 - 2")));
    assert!(is_structurally_zero(&p("sqrt(x1)^2 - x1")));
    assert!(is_structurally_zero(&p(
        "(sqrt(2)+1)*(sqrt(2)-1) - 1"
    )));
}

#[test]
fn simplify_exact_rational_constants() {
    assert_eq!(simplify(&p("1/3 + 1/6")), Expr::Const(ratio(1, 2)));
    assert_eq!(simplify(&p("2^-2")), Expr::Const(ratio(1, 4)));
}

#[test]
fn is_zero_on_literal_zero() {
    let cfg = Config::default();
    let at = pt(&[("x1", 1.0)]);
    assert!(is_zero(&p("0"), &at, &cfg).is_zero());
}

#[test]
fn is_zero_nonzero_witnessed_at_working_point() {
    let cfg = Config::default();
    let at = pt(&[("x1", 1.0), ("x2", 0.0), ("x3", 0.0)]);
    match is_zero(&p("x1"), &at, &cfg) {
        ZeroTest::NonzeroAt(w) => assert_eq!(w.get("x1"), Some(1.0)),
        other => panic!("expected NonzeroAt, got {other:?}"),
    }
}

#[test]
fn is_zero_trig_identity_is_structural() {
    let cfg = Config::default();
    let at = pt(&[("th1", 0.0)]);
    match is_zero(&p("sin(th1)^2+cos(th1)^2-1"), &at, &cfg) {
        ZeroTest::Zero { structural } => assert!(structural),
        other => panic!("expected Zero, got {other:?}"),
    }
}

#[test]
fn is_zero_unknown_when_singular_everywhere() {
    let cfg = Config::default();
    let at = pt(&[("x1", 0.0)]);
    // ln of a negative number fails at every sample in the radius-0.1 ball
    let e = p("ln(x1 - 10)");
    assert!(is_zero(&e, &at, &cfg).is_unknown());
}

#[test]
fn print_parse_round_trip_on_pipeline_shapes() {
    for text in [
        "x1*x2",
        "-(x1)^3 + x2^2 + x3",
        "2/x1",
        "sin(th1) - cos(th1)",
        "m*l*th2^2*sin(th1) + sec(th1)/l",
        "x1^-2",
        "1/2*x1 - 3/4",
        "sqrt(2)*ln(x1)",
    ] {
        let canon = simplify(&p(text));
        let reparsed = p(&canon.to_string());
        assert_eq!(
            simplify(&reparsed),
            canon,
            "round trip failed for {text}: printed {canon}"
        );
    }
}

#[test]
fn substitution_composes_maps() {
    let e = p("x1 + x2^2");
    let mut b = std::collections::BTreeMap::new();
    b.insert("x1".to_string(), p("y1*y1"));
    b.insert("x2".to_string(), p("th1"));
    let s = simplify(&e.substitute(&b));
    assert_eq!(s, simplify(&p("y1^2 + th1^2")));
}

#[test]
fn eval_detects_division_by_zero() {
    let e = p("2/x1");
    assert!(e.eval(&pt(&[("x1", 0.0)])).is_err());
    assert_eq!(e.eval(&pt(&[("x1", 2.0)])).unwrap(), 1.0);
}

#[test]
fn simplify_is_idempotent_on_quotients() {
    let e = p("(x1 + x2)/(x1*x2) + sin(th1)/cos(th1)");
    let s1 = simplify(&e);
    let s2 = simplify(&s1);
    assert_eq!(s1, s2);
}
