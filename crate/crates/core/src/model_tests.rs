use crate::config::Config;
use crate::expr::Expr;
use crate::model::*;
use crate::symmat::SymMatrix;

pub(crate) fn fixture(name: &str) -> String {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("cannot read {path}: {e}"))
}

pub(crate) fn load_fixture(name: &str) -> Dacs {
    load_system(&fixture(name), &Config::default()).unwrap()
}

#[test]
fn loads_the_academic_example() {
    let d = load_fixture("example51.dacs");
    assert_eq!((d.n_eqs(), d.n_states(), d.n_inputs()), (3, 3, 2));
    assert_eq!(d.point.get("x1"), Some(1.0));
    assert_eq!(d.point.get("x2"), Some(0.0));
    assert_eq!(d.point.get("x3"), Some(0.0));
}

#[test]
fn loads_the_manipulator_example() {
    let d = load_fixture("example52.dacs");
    assert_eq!((d.n_eqs(), d.n_states(), d.n_inputs()), (7, 7, 2));
    assert_eq!(d.point.get("m"), Some(1.0));
    assert_eq!(d.point.get("l"), Some(0.5));
}

#[test]
fn rejects_g_of_wrong_height() {
    let text = "\
[system] name=bad
[states] x1 x2
[inputs] u1
[point] x1=0 x2=0
[E]
1, 0
0, 1
[F]
x1
x2
[G]
1
";
    let err = load_system(text, &Config::default()).unwrap_err();
    assert!(matches!(err, ModelError::Dim(_)), "got {err:?}");
}

#[test]
fn rejects_undeclared_identifier_with_location() {
    let text = "\
[system] name=bad
[states] x1
[point] x1=0
[E]
1
[F]
x1 + q7
";
    let err = load_system(text, &Config::default()).unwrap_err();
    match err {
        ModelError::Parse { line, msg } => {
            assert_eq!(line, 7);
            assert!(msg.contains("q7"));
        }
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn round_trips_through_the_writer() {
    let d = load_fixture("example51.dacs");
    let text = system_to_string(&d);
    let d2 = load_system(&text, &Config::default()).unwrap();
    assert_eq!(d2.states, d.states);
    assert_eq!(d2.inputs, d.inputs);
    assert_eq!(d2.e.simplified(), d.e.simplified());
}

fn identity_witness(d: &Dacs) -> ExFbWitness {
    ExFbWitness {
        q: SymMatrix::identity(d.n_eqs()),
        psi: d.states.iter().map(|s| Expr::var(s.clone())).collect(),
        alpha_u: vec![Expr::zero(); d.n_inputs()],
        beta_u: SymMatrix::identity(d.n_inputs()),
    }
}

#[test]
fn ex_fb_equivalence_is_reflexive() {
    let cfg = Config::default();
    let d = load_fixture("example51.dacs");
    let rep = verify_ex_fb_equivalence(&d, &d, &identity_witness(&d), &cfg).unwrap();
    assert!(rep.all_passed(), "{rep:?}");
}

#[test]
fn ex_fb_witness_from_the_paper_carries_51_onto_its_target() {
    let cfg = Config::default();
    let a = load_fixture("example51.dacs");
    let b = load_fixture("example51_target.dacs");
    let w = load_witness(&fixture("example51.witness"), &a).unwrap();
    let rep = verify_ex_fb_equivalence(&a, &b, &w, &cfg).unwrap();
    assert!(rep.all_passed(), "{rep:?}");
}

#[test]
fn perturbed_f_fails_the_f_relation() {
    let cfg = Config::default();
    let a = load_fixture("example51.dacs");
    let mut b = a.clone();
    b.f[0] = b.f[0].clone() + Expr::one();
    let rep = verify_ex_fb_equivalence(&a, &b, &identity_witness(&a), &cfg).unwrap();
    assert!(rep.any_failed());
    let f_rel = rep
        .relations
        .iter()
        .find(|r| r.name == "F relation")
        .unwrap();
    assert!(matches!(f_rel.status, CheckStatus::Fail { .. }));
}

#[test]
fn linear_conversion_round_trip() {
    use crate::ratmat::RatMat;
    let ld = LinearDacs {
        e: RatMat::from_i64(&[&[1, 0], &[0, 0]]),
        h: RatMat::from_i64(&[&[0, 1], &[1, 0]]),
        l: RatMat::from_i64(&[&[0], &[1]]),
    };
    let d = ld.to_dacs("lin");
    let back = d.try_to_linear().unwrap();
    assert_eq!(back, ld);
}
