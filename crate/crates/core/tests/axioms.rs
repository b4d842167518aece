use dbcomp::entire::make_structure_function;
use dbcomp::verification::axiom_suite;
use dbcomp::{AmbientSpace, NodeSequence, RestrictedSpace, Truncation, C64};

const TOL: f64 = 1e-6;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn check(rs: &RestrictedSpace, seed: u64) {
    let r = axiom_suite(rs, 20, seed).unwrap();
    assert!(r.division < TOL, "{r:?}");
    assert!(r.conjugation < TOL, "{r:?}");
    assert!(r.double_division < TOL, "{r:?}");
}

#[test]
fn paley_wiener_one_gap() {
    let nodes = (-40i32..=40).filter(|&n| n != 0).map(|n| c(n as f64, 0.0)).collect();
    let rs = RestrictedSpace::build(AmbientSpace::paley_wiener(), NodeSequence::new(nodes, Truncation::Radius(40.0)).unwrap())
        .unwrap();
    check(&rs, 1);
}

#[test]
fn polynomial_space_real_nodes() {
    let e = make_structure_function(0.0, vec![c(0.0, -1.0), c(0.5, -1.5), c(-1.2, -0.7), c(2.0, -2.0), c(-0.4, -3.0)], 0.2)
        .unwrap();
    let rs = RestrictedSpace::build(AmbientSpace::new(e), NodeSequence::exact(vec![c(-0.8, 0.0), c(1.7, 0.0)]).unwrap()).unwrap();
    check(&rs, 2);
}

#[test]
fn polynomial_space_nonreal_nodes() {
    let e = make_structure_function(0.0, vec![c(0.3, -0.9), c(-1.0, -1.4), c(1.1, -0.6), c(0.0, -2.2)], 0.0).unwrap();
    let rs = RestrictedSpace::build(AmbientSpace::new(e), NodeSequence::exact(vec![c(0.4, 0.8)]).unwrap()).unwrap();
    check(&rs, 3);
}
