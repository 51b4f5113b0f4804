use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_decor-uniform"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(format!("{name}.json"))
}

fn run(args: &[&str], file: &Path) -> Output {
    bin().args(args).arg(file).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn uniformize(name: &str, extra: &[&str], dir: &Path) -> (Output, PathBuf) {
    let out = dir.join(format!("{name}.result.json"));
    let o = bin()
        .arg("uniformize")
        .arg(data(name))
        .args(extra)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    (o, out)
}

#[test]
fn check_reports_euler_and_total_curvature() {
    let o = run(&["check"], &data("tetrahedron"));
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("χ=2, ΣK=4π"), "{}", stdout(&o));
}

#[test]
fn check_lists_separation_violation() {
    let o = run(&["check"], &data("invalid_separation"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("separation violated on edge 0-1"));
}

#[test]
fn malformed_json_is_a_parse_error() {
    let o = run(&["check"], &data("malformed"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    let o = run(&["uniformize", "--constant", "--alpha", "2"], &data("malformed"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(data("tetrahedron"))
        .unwrap()
        .replacen("\"radii\"", "\"radius\"", 1);
    let p = dir.path().join("typo.json");
    std::fs::write(&p, text).unwrap();
    let o = run(&["check"], &p);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("radius"));
}

fn curvature_rows(o: &Output) -> Vec<(f64, f64)> {
    stdout(o)
        .lines()
        .skip(1)
        .filter_map(|l| {
            let c: Vec<&str> = l.split('\t').collect();
            (c.len() == 3).then(|| (c[1].parse().unwrap(), c[2].parse().unwrap()))
        })
        .collect()
}

#[test]
fn curvature_tables() {
    let o = run(&["curvature", "--alpha", "2"], &data("tetrahedron"));
    assert_eq!(o.status.code(), Some(0));
    let rows = curvature_rows(&o);
    assert_eq!(rows.len(), 4);
    assert!(rows
        .iter()
        .all(|(k, r)| (k - std::f64::consts::PI).abs() < 1e-12 && (r - k).abs() < 1e-12));

    let o = run(&["curvature", "--alpha", "2"], &data("flat_torus"));
    let rows = curvature_rows(&o);
    assert_eq!(rows.len(), 36);
    assert!(rows.iter().all(|(k, r)| k.abs() < 1e-12 && r.abs() < 1e-10));

    let o = run(&["curvature", "--alpha", "-1"], &data("genus2"));
    assert_eq!(o.status.code(), Some(0));
    let sum: f64 = curvature_rows(&o).iter().map(|r| r.0).sum();
    assert!((sum + 4.0 * std::f64::consts::PI).abs() < 1e-10);
}

#[test]
fn torus_constant_curvature() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = uniformize("torus", &["--constant", "--alpha", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(v["residual"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["case_label"], "ZeroEulerZero");
    assert_eq!(v["uniqueness"], "UniqueUpToScaling");
    let sum: f64 = v["u"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
    assert!(sum.abs() < 1e-12);
}

#[test]
fn genus_two_verifies_and_tampering_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = uniformize("genus2", &[], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(run(&["verify"], &out).status.code(), Some(0));

    // Reserialized through a generic JSON value.
    let mut v: Value = serde_json::from_str(&text).unwrap();
    let again = dir.path().join("again.json");
    std::fs::write(&again, serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(run(&["verify"], &again).status.code(), Some(0));

    let u0 = v["u"][0].as_f64().unwrap();
    v["u"][0] = Value::from(u0 + 1e-4);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&v).unwrap()).unwrap();
    let o = run(&["verify"], &bad);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAILED"));
}

#[test]
fn unsupported_sign_case_exits_3() {
    let o = run(&["uniformize", "--alpha", "2", "--constant"], &data("sphere_unsupported"));
    assert_eq!(o.status.code(), Some(3));
    let msg = stderr(&o);
    assert!(msg.contains("chi = 2 > 0"), "{msg}");
    assert!(msg.contains("(1) chi > 0, alpha < 0, R > 0"), "{msg}");

    // A prescribed target outside the table needs --force.
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("target.json");
    std::fs::write(&t, "[1.0, 1.0, 1.0, 1.0]").unwrap();
    let o = run(
        &["uniformize", "--alpha", "1", "--target", t.to_str().unwrap()],
        &data("tetrahedron"),
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn target_file_and_thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("target.json");
    std::fs::write(&t, "[0.5, 0.5, 0.5, 0.5]").unwrap();
    let out = dir.path().join("r.json");
    let o = bin()
        .env("DECOR_UNIFORM_THREADS", "1")
        .args(["uniformize", "--alpha", "-1", "--target", t.to_str().unwrap(), "--trace", "--out"])
        .arg(&out)
        .arg(data("tetrahedron"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("iter 0 residual"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["target"][0], 0.5);
    assert_eq!(v["case_label"], "PosEulerNegAlphaPos");

    std::fs::write(&t, "[0.5, 0.5]").unwrap();
    let o = run(
        &["uniformize", "--alpha", "-1", "--target", t.to_str().unwrap()],
        &data("tetrahedron"),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn no_convergence_exits_4() {
    let o = run(&["uniformize", "--max-iters", "1", "--tol", "1e-14"], &data("genus2_constant"));
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_1() {
    let o = bin().args(["uniformize"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = bin().args(["check", "/nonexistent/problem.json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
