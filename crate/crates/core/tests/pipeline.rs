//! Library pipelines on the shipped domain files.

use std::path::Path;
use std::sync::Arc;

use greenfem::analysis::{meyers_exponent, verify_representation, MeyersProblem};
use greenfem::green::{approximate_green, mixed_setup, representation_solve};
use greenfem::mesh::FnField;
use greenfem::mixed::Constraint;
use greenfem::operators::CoefficientField;
use greenfem::{Domain, Mesh, Point};

fn domain(name: &str) -> Domain {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name);
    Domain::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn lshape_meyers_exponent() {
    // re-entrant corner of angle 3π/2: ∇u ~ r^{-1/3}, and ∫ r^{-t/3} r dr is
    // finite exactly for t < 6
    let problem = MeyersProblem {
        dom: domain("lshape.dom"),
        cf: CoefficientField::laplace(),
        f: vec![1.0],
        f_n: None,
        expected: Some((5.5, 6.5)),
    };
    let rep = meyers_exponent(&problem, &[0.04, 0.02, 0.01], &[4.0, 4.5, 5.0, 5.5, 6.5, 7.0, 7.5]).unwrap();
    assert!(rep.passed(), "{}", rep.to_text());
}

#[test]
fn zaremba_representation_matches_direct_solve() {
    let dom = domain("zaremba.dom");
    let h = 0.025;
    let mesh = Arc::new(Mesh::triangulate(&dom, h).unwrap());
    let solver = mixed_setup(mesh, &CoefficientField::laplace(), Constraint::Mixed).unwrap();
    let f = FnField::new(1, |p: Point, o: &mut [f64]| o[0] = p.x - p.y);
    let g = FnField::new(1, |_, o: &mut [f64]| o[0] = 1.0);
    let poles = [Point::new(0.5, 0.5), Point::new(0.3, 0.3), Point::new(0.7, 0.6)];
    let rep = verify_representation(&solver, &dom, Some(&f), Some(&g), &poles, 4.0 * h).unwrap();
    assert!(rep.passed(), "{}", rep.to_text());

    // the representation is linear in the data
    let gf = approximate_green(&solver, &dom, poles[0], 4.0 * h).unwrap();
    let f2 = FnField::new(1, |p: Point, o: &mut [f64]| o[0] = 2.0 * (p.x - p.y));
    let one = representation_solve(std::slice::from_ref(&gf), Some(&f), None).unwrap()[0][0];
    let two = representation_solve(std::slice::from_ref(&gf), Some(&f2), None).unwrap()[0][0];
    assert!((two - 2.0 * one).abs() <= 1e-12 * one.abs().max(1e-300));
}
