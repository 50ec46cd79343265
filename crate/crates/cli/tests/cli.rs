use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn resgeom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resgeom"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Runs with `--out` into `dir` and returns the parsed file.
fn run_json(dir: &Path, args: &[&str]) -> Value {
    let out = dir.join("out.json");
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--out", out.to_str().unwrap()]);
    let o = resgeom(&full);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn power_exponent_for_jordan_block() {
    let dir = TempDir::new().unwrap();
    let doc = run_json(dir.path(), &["power-exponent", "--op", "jordan:4", "--vector", "e2"]);
    assert!((f(&doc["result"]["k_hat"]) - 0.5).abs() <= 0.03);
    assert_eq!(doc["metadata"]["conventions"]["metric"], "g = squared norm");
    assert_eq!(f(&doc["metadata"]["tolerances"]["singular"]), 1e-8);
    assert_eq!(doc["result"]["radii"].as_array().unwrap().len(), 12);
}

#[test]
fn dihedral_determinant() {
    let dir = TempDir::new().unwrap();
    let doc = run_json(dir.path(), &["fk-det", "--dihedral", "--z1", "0.5+0i", "--z2", "0"]);
    assert!((f(&doc["result"]["fk_det"]) - 0.866025).abs() <= 1e-6);
}

#[test]
fn scalar_metric_grid() {
    let dir = TempDir::new().unwrap();
    let tuple = write(dir.path(), "t.json", r#"{"matrices": [[[[1, 0]]]]}"#);
    let doc = run_json(
        dir.path(),
        &["metric-grid", "--tuple", tuple.to_str().unwrap(), "--grid", "1:2:5,0:1:4"],
    );
    let points = doc["result"]["points"].as_array().unwrap();
    assert_eq!(points.len(), 20);
    for p in points {
        let (x, y) = (f(&p["z"][0][0]), f(&p["z"][0][1]));
        let g = f(&p["sample"]["g"][0][0][0]);
        assert!((g - 1.0 / (x * x + y * y)).abs() <= 1e-14, "{x} {y} {g}");
    }
}

#[test]
fn grid_marks_singular_points() {
    let dir = TempDir::new().unwrap();
    let tuple = write(dir.path(), "t.json", r#"{"matrices": [[[[1, 0]]]]}"#);
    let doc = run_json(
        dir.path(),
        &["metric-grid", "--tuple", tuple.to_str().unwrap(), "--grid", "-1:1:3,-1:1:3"],
    );
    let singular: Vec<bool> = doc["result"]["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["singular"].as_bool().unwrap())
        .collect();
    assert_eq!(singular.iter().filter(|&&s| s).count(), 1);
    assert!(singular[4]);
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let tuple = write(
        dir.path(),
        "t.json",
        r#"{"normalized": true, "matrices": [[[[1,0],[0,0]],[[0,0],[1,0]]], [[[1,0],[0,0]],[[0,0],[2,0]]]]}"#,
    );
    let args = [
        "ricci-grid",
        "--tuple",
        tuple.to_str().unwrap(),
        "--grid",
        "0.2:0.8:3,0.1:0.5:3",
        "--format",
        "csv",
    ];
    let a = resgeom(&args);
    let b = resgeom(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("# conventions.metric: g = squared norm"));
    assert!(text.contains("# tolerances.singular: 1e-8"));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("i,j,u,v,ricci_00_re"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 10);
}

#[test]
fn spectrum_of_diagonal_pencil() {
    let dir = TempDir::new().unwrap();
    // (I, diag(1, 2)) is singular at z₁ = −1 and z₁ = −1/2.
    let tuple = write(
        dir.path(),
        "t.json",
        r#"{"normalized": true, "matrices": [[[[1,0],[0,0]],[[0,0],[1,0]]], [[[1,0],[0,0]],[[0,0],[2,0]]]]}"#,
    );
    let doc = run_json(
        dir.path(),
        &["spectrum", "--tuple", tuple.to_str().unwrap(), "--grid", "-1.2:0.2:15,-0.3:0.3:7"],
    );
    let pts = doc["result"]["points"].as_array().unwrap();
    assert!(!pts.is_empty());
    for p in pts {
        let (u, v) = (f(&p["uv"][0]), f(&p["uv"][1]));
        let d = (u + 1.0).abs().min((u + 0.5).abs()).hypot(v);
        assert!(d < 1e-4, "{u} {v}");
    }
}

#[test]
fn path_and_circle_lengths() {
    let dir = TempDir::new().unwrap();
    let path = write(
        dir.path(),
        "p.json",
        r#"{"kind": "polyline", "vertices": [[[2, 0]], [[4, 0]]]}"#,
    );
    let tuple = write(dir.path(), "t.json", r#"{"matrices": [[[[1, 0]]]]}"#);
    // g = 1/|z|² along [2, 4]: length log 2.
    let doc = run_json(
        dir.path(),
        &["path-length", "--tuple", tuple.to_str().unwrap(), "--path", path.to_str().unwrap()],
    );
    assert!((f(&doc["result"]["length"]) - 2f64.ln()).abs() < 1e-8);

    // Circle of radius 2 about the spectrum of the 1x1 zero operator: g = 1/r².
    let zero = write(dir.path(), "z.json", "[[[0, 0], [0, 0]], [[0, 0], [0, 0]]]");
    let spec = format!("matrix:{}", zero.to_str().unwrap());
    let doc = run_json(dir.path(), &["circle-length", "--op", &spec, "--radius", "2"]);
    assert!((f(&doc["result"]["length"]) - std::f64::consts::TAU).abs() < 1e-9);
}

#[test]
fn log_potential_of_circle() {
    let dir = TempDir::new().unwrap();
    let m = write(
        dir.path(),
        "m.json",
        r#"{"kind": "uniform_circle", "center": [0, 0], "radius": 1}"#,
    );
    let doc = run_json(
        dir.path(),
        &["log-potential", "--measure", m.to_str().unwrap(), "--z", "1", "--z", "2", "--z", "-0.5i"],
    );
    let v = doc["result"]["values"].as_array().unwrap();
    assert!(f(&v[0]["potential"]).abs() < 1e-6);
    assert!((f(&v[1]["potential"]) + 2f64.ln()).abs() < 1e-6);
    assert!(f(&v[2]["potential"]).abs() < 1e-9);
}

#[test]
fn riesz_and_principal_part() {
    let dir = TempDir::new().unwrap();
    let doc = run_json(
        dir.path(),
        &["riesz", "--op", "jordan:4", "--radius", "1", "--vector", "e4"],
    );
    let r = &doc["result"];
    assert!(f(&r["idempotency_defect"]) < 1e-8);
    let norms: Vec<f64> = r["principal_part"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| f(&t["norm"]))
        .collect();
    assert_eq!(norms.iter().filter(|&&n| n > 1e-12).count(), 4);
}

#[test]
fn power_set_filtration_and_similarity() {
    let dir = TempDir::new().unwrap();
    let doc = run_json(dir.path(), &["power-set", "--op", "jordan:3"]);
    let set: Vec<f64> = doc["result"]["power_set"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| f(&e["exponent"]))
        .collect();
    assert_eq!(set.len(), 3);
    for (got, want) in set.iter().zip([1.0 / 3.0, 2.0 / 3.0, 1.0]) {
        assert!((got - want).abs() <= 0.03);
    }

    let doc = run_json(dir.path(), &["filtration", "--op", "jordan:4", "--tau", "0.55"]);
    assert_eq!(doc["result"]["dimension"], 2);
    assert!(f(&doc["result"]["commutant_defect"]) < 1e-6);

    let doc = run_json(dir.path(), &["similarity-check", "--op", "jordan:3", "--seed", "7"]);
    assert!(f(&doc["result"]["max_discrepancy"]) <= 0.05);
}

#[test]
fn volterra_power_exponent_is_bracketed() {
    let dir = TempDir::new().unwrap();
    let doc = run_json(dir.path(), &["power-exponent", "--op", "volterra", "--vector", "f0.5"]);
    let r = &doc["result"];
    let (lo, hi) = (f(&r["bracket"][0]), f(&r["bracket"][1]));
    assert!(lo <= 0.5 && 0.5 <= hi && hi - lo <= 0.1);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    // Parse errors.
    for args in [
        vec!["fk-det", "--dihedral", "--z1", "1+2", "--z2", "0"],
        vec!["power-exponent", "--op", "jordan", "--vector", "e1"],
        vec!["metric-grid", "--tuple", "missing.json", "--grid", "0:1:2,0:1:2"],
        vec!["power-exponent", "--op", "jordan:3", "--vector", "e1", "--radii", "0.1:2:12"],
        vec!["no-such-command"],
    ] {
        let o = resgeom(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert!(!err.trim().is_empty());
    }
    let tuple = write(dir.path(), "t.json", r#"{"matrices": [[[[1, 0]]]]}"#);
    // Grids need two samples per axis.
    let o = resgeom(&["metric-grid", "--tuple", tuple.to_str().unwrap(), "--grid", "0:1:1,0:1:2"]);
    assert_eq!(o.status.code(), Some(1));

    // Domain violations: a contour or circle through an eigenvalue.
    let o = resgeom(&["riesz", "--op", "jordan:2", "--center", "1", "--radius", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = resgeom(&["circle-length", "--op", "jordan:3", "--center", "-1", "--radius", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);

    // A divergent path is reported, not an error.
    let path = write(dir.path(), "p.json", r#"{"kind": "polyline", "vertices": [[[0, 0]], [[1, 0]]]}"#);
    let doc = run_json(
        dir.path(),
        &["path-length", "--tuple", tuple.to_str().unwrap(), "--path", path.to_str().unwrap()],
    );
    assert_eq!(doc["result"]["divergent"], true);
}
