use std::path::PathBuf;

use ellbvp::linalg::c;
use ellbvp::symbol::{
    check_interior_ellipticity, direct_sum, make_model_operator, matrix::homogeneity_defect, InteriorGrid, ManifoldKind,
    MatrixSymbol, ModelKind, ModelManifold, ProblemFile, SymbolPoint,
};
use ellbvp::Error;

fn examples() -> Vec<PathBuf> {
    let dir: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "problems"].iter().collect();
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
}

#[test]
fn every_example_problem_builds() {
    let mut built = 0;
    for path in examples() {
        let text = std::fs::read_to_string(&path).unwrap();
        if text.contains("\"coefficients\"") {
            let p = ProblemFile::from_json(&text).unwrap().build().unwrap();
            assert!(check_interior_ellipticity(&p.operator, &InteriorGrid::uniform(8, 3, 32), 1e-8).unwrap().elliptic, "{path:?}");
            built += 1;
        }
    }
    assert!(built >= 6);
}

#[test]
fn parsed_symbols_are_homogeneous() {
    let s = MatrixSymbol::parse(&[vec!["xi^2 + 3*i*xi*e(1)".into(), "absxi*absxi".into()]], 2).unwrap();
    let points: Vec<SymbolPoint> = [0.0, 1.0, 2.5].iter().map(|&x| SymbolPoint::new(x, 0.3, 0.8, c(0.6, 0.0))).collect();
    assert!(homogeneity_defect(&s, &points, &[0.5, 2.0, 10.0]) < 1e-12);
}

#[test]
fn model_operators_on_each_manifold() {
    for kind in [ManifoldKind::Cylinder, ManifoldKind::Disk] {
        let m = ModelManifold::new(kind);
        let p = make_model_operator(ModelKind::Dpm, (1, 2), &m).unwrap();
        assert_eq!(p.rank(), 3);
        assert_eq!(p.ends.len(), m.ends());
        assert_eq!(p.ends[0].target_rank(), 2);
    }
    assert!(make_model_operator(ModelKind::Dplus, (1, 1), &ModelManifold::new(ManifoldKind::Disk)).is_err());
}

#[test]
fn direct_sum_adds_ranks() {
    let cyl = ModelManifold::new(ManifoldKind::Cylinder);
    let a = make_model_operator(ModelKind::Dplus, (2, 0), &cyl).unwrap();
    let b = make_model_operator(ModelKind::Dminus, (0, 1), &cyl).unwrap();
    let s = direct_sum(&a, &b).unwrap();
    assert_eq!(s.rank(), 3);
    assert_eq!(s.ends[0].target_rank(), a.ends[0].target_rank() + b.ends[0].target_rank());
}

#[test]
fn malformed_files_report_their_location() {
    let wrong_count = r#"{"name": "x", "manifold": "Disk", "order": 1,
        "coefficients": [[["1"]]], "boundary_condition": [[[["1"]]]]}"#;
    match ProblemFile::from_json(wrong_count).unwrap().build() {
        Err(Error::Parse { location, .. }) => assert_eq!(location, "coefficients"),
        other => panic!("{other:?}"),
    }
    match ProblemFile::from_json("{\"name\": 3}") {
        Err(Error::Parse { location, .. }) => assert!(location.starts_with("line 1 column")),
        other => panic!("{other:?}"),
    }
}
