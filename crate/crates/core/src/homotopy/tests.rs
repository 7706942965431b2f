use super::*;
use crate::index::discretize::Resolution;
use crate::index::numeric::{index_report, DEFAULT_RANK_TOL};
use crate::linalg::{c, CMat};
use crate::symbol::{BoundaryCondition, CollarOperator, EndCondition, ManifoldKind, MatrixSymbol, ModelManifold, SymbolPoint};
use crate::Error;

fn sym(rows: &[&[&str]], degree: i32) -> MatrixSymbol {
    let rows: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect();
    MatrixSymbol::parse(&rows, degree).unwrap()
}

/// `-i d/dt + d_1` with `A = i d_1` given row by row in units of `|xi|`.
fn problem(a: &[&[&str]], near: &[&str], far: &[&str]) -> BvpProblem {
    let n = a.len();
    let d1: Vec<Vec<String>> = a.iter().map(|r| r.iter().map(|e| format!("-i*({e})*absxi")).collect()).collect();
    let d1 = MatrixSymbol::parse(&d1, 1).unwrap();
    let op = CollarOperator::new(vec![MatrixSymbol::identity(n), d1], None).unwrap();
    let ends = vec![
        EndCondition::classical(BoundaryCondition::new(vec![sym(&[near], 0)]).unwrap()),
        EndCondition::classical(BoundaryCondition::new(vec![sym(&[far], 0)]).unwrap()),
    ];
    BvpProblem::new("test", ModelManifold::new(ManifoldKind::Cylinder), op, ends).unwrap()
}

fn tangential_at(p: &BvpProblem, x: f64, t: f64, xi: f64) -> CMat {
    p.operator.coefficients()[1].eval(&SymbolPoint::new(x, t, xi, c(0.0, 0.0))) * crate::linalg::I
}

fn index(p: &BvpProblem) -> i64 {
    let res = [Resolution::from_modes(8), Resolution::from_modes(12)];
    index_report(p, &res, DEFAULT_RANK_TOL).unwrap().stable_index().expect("determinate index")
}

fn small_grid() -> CertifyGrid {
    CertifyGrid { boundary: BoundaryGrid::uniform(8), interior: InteriorGrid::uniform(4, 3, 16), ..CertifyGrid::default() }
}

#[test]
fn flattening_ends_at_the_sign() {
    let p = problem(&[&["2", "1"], &["0", "-3"]], &["1", "0.5"], &["0.3", "1"]);
    let (path, cert) = flatten_path(&p, 11, &small_grid()).unwrap();
    assert!(cert.valid, "{:?}", cert.first_failure);
    assert!(cert.max_angle() < 1e-8);
    for xi in [1.0, -1.0] {
        let a = tangential_at(path.end(), 0.4, 0.0, xi);
        assert!((&a * &a - crate::linalg::identity(2)).norm() < 1e-12);
    }
    assert_eq!(index(&p), index(path.end()));
}

#[test]
fn flat_input_gives_a_constant_path() {
    let p = problem(&[&["1", "0"], &["0", "-1"]], &["1", "0.5"], &["0.3", "1"]);
    let (path, _) = flatten_path(&p, 5, &small_grid()).unwrap();
    let a0 = tangential_at(path.start(), 0.2, 0.3, -1.0);
    for step in &path.steps {
        assert!((tangential_at(step, 0.2, 0.3, -1.0) - &a0).norm() < 1e-14);
    }
}

#[test]
fn rotation_keeps_projections_and_reaches_the_target() {
    let p = problem(&[&["2", "1"], &["0", "-3"]], &["1", "0.5"], &["0.3", "1"]);
    let red = reduce_to_spectral(&p, 9, &small_grid()).unwrap();
    assert!(!red.constant);
    assert!(red.certificate.valid, "{:?}", red.certificate.first_failure);
    let half = red.path.steps.len() / 2;
    for step in &red.path.steps[half..] {
        assert!(projection_defect(step, &small_grid()).unwrap() < 1e-10);
    }
    let b = red.problem.ends[0].condition.stacked_at(1.0, 1.0);
    let expect = CMat::from_row_slice(1, 3, &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    assert!((b - expect).norm() < 1e-12);
    assert_eq!(index(&p), index(&red.problem));
}

#[test]
fn model_spectral_input_is_left_alone() {
    let cyl = ModelManifold::new(ManifoldKind::Cylinder);
    let p = crate::index::verify::finite_rank_generator(1).unwrap();
    assert_eq!(p.manifold.kind(), cyl.kind());
    let red = reduce_to_spectral(&p, 5, &small_grid()).unwrap();
    assert!(red.constant);
}

#[test]
fn degenerate_condition_cannot_rotate() {
    let p = problem(&[&["1", "0"], &["0", "-1"]], &["0", "1"], &["0.3", "1"]);
    assert!(matches!(reduce_to_spectral(&p, 5, &small_grid()), Err(Error::CannotRotate { .. })));
}

#[test]
fn certificate_reports_the_first_failing_step() {
    let family: ProblemFamily = Arc::new(|s: f64| {
        let b = format!("{}", (std::f64::consts::PI * s).cos());
        Ok(problem(&[&["1", "0"], &["0", "-1"]], &[b.as_str(), "1"], &["0.3", "1"]))
    });
    let path = HomotopyPath::sample(PathKind::Rotate, 11, true, family).unwrap();
    let cert = certify_path(&path, &small_grid());
    assert!(!cert.valid);
    assert_eq!(cert.first_failure, Some(5));
    let mut out = Vec::new();
    cert.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("step,parameter,interior_margin,boundary_margin,max_principal_angle"));
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn collar_pull_is_local() {
    let p = problem(&[&["2", "1"], &["0", "-3"]], &["1", "0.5"], &["0.3", "1"]);
    let (path, _) = flatten_path(&p, 5, &small_grid()).unwrap();
    let same = collar_pull(&p, &path, &Cutoff::standard(), 0.0).unwrap();
    assert!((tangential_at(&same, 0.1, 0.05, 1.0) - tangential_at(&p, 0.1, 0.05, 1.0)).norm() == 0.0);
    let pulled = collar_pull(&p, &path, &Cutoff::standard(), 1.0).unwrap();
    for t in [0.5, 0.7, 1.0] {
        assert!((tangential_at(&pulled, 0.1, t, -1.0) - tangential_at(&p, 0.1, t, -1.0)).norm() < 1e-14);
    }
    let edge = tangential_at(&pulled, 0.1, 0.0, 1.0);
    assert!((&edge - tangential_at(path.end(), 0.1, 0.0, 1.0)).norm() < 1e-14);
    assert!(matches!(collar_pull(&p, &path, &Cutoff { a: 0.4, b: 0.3 }, 1.0), Err(Error::InvalidCutoff(_))));
}

fn second_order(middle: &str) -> BvpProblem {
    let op = CollarOperator::new(vec![sym(&[&["1"]], 0), sym(&[&[middle]], 1), sym(&[&["absxi*absxi"]], 2)], None).unwrap();
    let dirichlet = || EndCondition::classical(BoundaryCondition::new(vec![sym(&[&["1"]], 0), sym(&[&["0"]], -1)]).unwrap());
    BvpProblem::new("second-order", ModelManifold::new(ManifoldKind::Cylinder), op, vec![dirichlet(), dirichlet()]).unwrap()
}

#[test]
fn first_order_input_is_not_reduced() {
    let p = problem(&[&["1"]], &["1"], &["1"]);
    let r = reduce_order(&p, 5, &small_grid()).unwrap();
    assert!(r.trace.samples.is_empty());
    assert_eq!(r.first_order.order(), 1);
}

#[test]
fn second_order_reduction_factors_at_the_end() {
    let p = second_order("0.5*xi");
    let r = reduce_order(&p, 11, &small_grid()).unwrap();
    assert!(r.certificate.valid, "{:?}", r.certificate.first_failure);
    assert!(r.trace.endpoint_residual < 1e-10, "{}", r.trace.endpoint_residual);
    assert!(r.trace.boundary_residual < 1e-10, "{}", r.trace.boundary_residual);
    assert!(r.trace.ranks_preserved());
    assert!(r.trace.samples.iter().all(|s| s.pr_angle < 1e-8));
    assert!(!r.trace.trivial);
    assert_eq!(r.first_order.order(), 1);
    assert_eq!(r.first_order.rank(), 2);
    assert_eq!(index(&p), index(&r.endpoint));
}

#[test]
fn factored_input_has_a_trivial_homotopy() {
    let r = reduce_order(&second_order("0"), 11, &small_grid()).unwrap();
    assert!(r.certificate.valid);
    assert!(r.trace.trivial, "{} {}", r.trace.factor_remainder, r.trace.diagonal_variation);
}
