use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn example(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "problems", &format!("{name}.json")].iter().collect()
}

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ellbvp"))
        .args(["--resolution", "8,12", "--out"])
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Path, name: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(out.join(format!("{name}.report.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn check_model_problem_is_elliptic() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["check", example("dpm").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path(), "dpm");
    assert_eq!(r["verdict"], "elliptic");
    assert_eq!(r["tool"], "ellbvp-cli");
    assert!(r["version"].is_string());
    assert!(r["config"]["resolution"].is_array());
    assert!(dir.path().join("dpm.sl.csv").exists());
}

#[test]
fn obstructed_problem_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["obstruct", example("cauchy-riemann").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let r = report(dir.path(), "cauchy-riemann");
    assert_eq!(r["result"]["obstruction"].as_i64().map(i64::abs), Some(1));
}

#[test]
fn model_problem_has_index_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["index", example("dpm").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(dir.path(), "dpm");
    assert_eq!(r["result"]["index"], 0);
    assert_eq!(r["result"]["verdict"], "stable");
}

#[test]
fn d_functional_of_projection_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["dfun", example("mode-shift").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let d = &report(dir.path(), "mode-shift")["result"]["d"];
    assert_eq!((d["numerator"].as_i64(), d["exponent"].as_i64()), (Some(2), Some(0)));
}

#[test]
fn malformed_input_exits_with_two_and_a_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"name\": \"bad\",\n  \"manifold\": \"Cylinder\",\n  \"order\": 1,\n  \"extra\": true\n}\n").unwrap();
    let o = run(dir.path(), &["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 5"), "{err}");
}

#[test]
fn invalid_configuration_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ellbvp"))
        .args(["--resolution", "12,8", "--out"])
        .arg(dir.path())
        .args(["index", example("dpm").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reports_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let o = run(dir.path(), &["--seed", "3", "verify", "cobordism"]);
        assert_eq!(o.status.code(), Some(0));
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("cobordism.report.json")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn reduce_writes_the_order_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--tau-steps", "11", "reduce", example("skew-second-order").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = std::fs::read_to_string(dir.path().join("skew-second-order.order.csv")).unwrap();
    assert_eq!(trace.lines().count(), 12);
}
