use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cat0-audit"))
}

fn run(args: &[&str]) -> (i32, Value, String) {
    let out: Output = bin().args(args).output().expect("binary runs");
    let report = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap_or(-1), report, String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const OCTAHEDRON_6: &str = r#"{"labels":["x0","x1","y0","y1","z0","z1"],"dist":[
 [0,2,1.4142135623730951,1.4142135623730951,1.4142135623730951,1.4142135623730951],
 [2,0,1.4142135623730951,1.4142135623730951,1.4142135623730951,1.4142135623730951],
 [1.4142135623730951,1.4142135623730951,0,2,1.4142135623730951,1.4142135623730951],
 [1.4142135623730951,1.4142135623730951,2,0,1.4142135623730951,1.4142135623730951],
 [1.4142135623730951,1.4142135623730951,1.4142135623730951,1.4142135623730951,0,2],
 [1.4142135623730951,1.4142135623730951,1.4142135623730951,1.4142135623730951,2,0]]}"#;

const SQUARE: &str = r#"{"labels":["a","b","c","d"],"dist":[
 [0,1,1.4142135623730951,1],[1,0,1,1.4142135623730951],
 [1.4142135623730951,1,0,1],[1,1.4142135623730951,1,0]]}"#;

/// A random non-Euclidean space and graph on which the projections need
/// more than a handful of steps to reach a certificate.
const HARD_SPACE: &str = r#"{"labels":["p0","p1","p2","p3","p4","p5","p6","p7"],"dist":[
 [0,1.811,1.858,1.408,1.241,1.622,1.713,1.437],[1.811,0,1.94,1.232,1.225,1.72,1.687,1.342],
 [1.858,1.94,0,1.042,1.713,1.299,1.444,1.801],[1.408,1.232,1.042,0,1.379,1.719,1.171,1.49],
 [1.241,1.225,1.713,1.379,0,1.36,1.146,1.939],[1.622,1.72,1.299,1.719,1.36,0,1.992,1.112],
 [1.713,1.687,1.444,1.171,1.146,1.992,0,1.646],[1.437,1.342,1.801,1.49,1.939,1.112,1.646,0]]}"#;
const HARD_GRAPH: &str = r#"{"n":8,"edges":[[1,2],[0,4],[1,4],[2,5],[4,5],[2,6],[3,6],[4,6],[0,7],[2,7],[4,7],[5,7],[6,7]]}"#;

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.json", r#"{"labels":["p","q"],"dist":[[0,1],[1,0]]}"#);
    assert_eq!(run(&["validate", s(&ok)]).0, 0);

    let tri = write(dir.path(), "tri.json", r#"{"labels":["p","q","r"],"dist":[[0,1,3],[1,0,1],[3,1,0]]}"#);
    let (code, report, _) = run(&["validate", s(&tri)]);
    assert_eq!(code, 1);
    let v = &report["result"]["violations"][0];
    assert_eq!(v["kind"], "triangle");
    let mut named: Vec<String> = v["labels"].as_array().unwrap().iter().map(|x| x.as_str().unwrap().to_string()).collect();
    named.sort();
    assert_eq!(named, ["p", "q", "r"]);
    assert!((v["slack"].as_f64().unwrap() + 1.0).abs() < 1e-12);

    let bad = write(dir.path(), "bad.json", r#"{"labels": ["p""#);
    assert_eq!(run(&["validate", s(&bad)]).0, 3);
    assert_eq!(run(&["validate", s(&dir.path().join("missing.json"))]).0, 3);
}

#[test]
fn check_euclidean_spaces_pass() {
    let dir = tempfile::tempdir().unwrap();
    let oct = write(dir.path(), "oct.json", OCTAHEDRON_6);
    let (code, report, _) = run(&["check", s(&oct), "--family", "sixpoint", "--grid", "5"]);
    assert_eq!(code, 0);
    assert!(report["result"]["normalized_margin"].as_f64().unwrap() >= -1e-9);
    assert_eq!(run(&["check", s(&oct), "--family", "ann", "--samples", "4"]).0, 0);

    let sq = write(dir.path(), "sq.json", SQUARE);
    let (code, report, _) = run(&["check", s(&sq), "--family", "boxtimes"]);
    assert_eq!(code, 0);
    assert_eq!(report["result"]["embeddable"], true);
    assert_eq!(report["verdict"], "satisfied");
}

#[test]
fn check_boxtimes_violation_has_reproducible_witness() {
    let dir = tempfile::tempdir().unwrap();
    let sq = write(
        dir.path(),
        "sq.json",
        r#"{"labels":["a","b","c","d"],"dist":[[0,1,1.9,1],[1,0,1,1.9],[1.9,1,0,1],[1,1.9,1,0]]}"#,
    );
    let (code, report, _) = run(&["check", s(&sq), "--family", "boxtimes"]);
    assert_eq!(code, 1);
    assert_eq!(report["result"]["embeddable"], false);
    let doc: cat0_core::witness::WitnessDocument =
        serde_json::from_value(report["result"]["witness"].clone()).unwrap();
    let space = cat0_core::FiniteMetricSpace::read(&sq).unwrap();
    let again = doc.verify(&space).unwrap();
    assert!((again - report["result"]["margin"].as_f64().unwrap()).abs() < 1e-9);
    assert_eq!(report["input"]["space_checksum"].as_str().unwrap(), space.checksum());
}

#[test]
fn lebedeva_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("leb");
    let (code, report, _) = run(&["lebedeva", "--params", "0.25,0.5,0.5,0.5,0.5", "--out", s(&out)]);
    assert_eq!(code, 0);
    let predicted = report["result"]["predicted_margin"].as_f64().unwrap();
    let eps = report["result"]["epsilon"].as_f64().unwrap();
    let d = report["result"]["z_length"].as_f64().unwrap();
    let formula = -0.25 * 0.5 * 0.5 * 0.5 * (2.0 * d * eps + eps * eps);
    assert!((predicted - formula).abs() < 1e-15);

    let metric = out.join("metric.json");
    let (code, report, _) = run(&["check", s(&metric), "--family", "sixpoint", "--params", "0.25,0.5,0.5,0.5,0.5"]);
    assert_eq!(code, 1);
    assert!((report["result"]["margin"].as_f64().unwrap() - formula).abs() < 1e-9);

    let (code, report, _) = run(&["trace", s(&out.join("config.json"))]);
    assert_eq!(code, 0);
    assert!(report["result"]["max_abs_normalized_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(report["result"]["reduced"], false);

    let (code, report, _) = run(&["graph", s(&metric), "--graph", "o3"]);
    assert_eq!(code, 1);
    assert_eq!(report["result"]["outcome"]["check"]["valid"], true);
}

#[test]
fn lebedeva_without_stretch_is_an_equality_case() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("leb0");
    assert_eq!(run(&["lebedeva", "--params", "0.25,0.5,0.5,0.5,0.5", "--epsilon", "0", "--out", s(&out)]).0, 0);
    let (code, report, _) = run(&[
        "check",
        s(&out.join("metric.json")),
        "--family",
        "sixpoint",
        "--params",
        "0.25,0.5,0.5,0.5,0.5",
    ]);
    assert_eq!(code, 0);
    assert!(report["result"]["margin"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn lebedeva_rejects_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    assert_eq!(run(&["lebedeva", "--params", "0.6,0.5,0.5,0.5,0.5", "--out", s(&out)]).0, 3);
    assert_eq!(run(&["lebedeva", "--params", "0.5,0.5,0.5,0.5,0.5", "--out", s(&out)]).0, 3);
    assert_eq!(run(&["lebedeva", "--params", "0.1,0.5", "--out", s(&out)]).0, 3);
    assert_eq!(run(&["lebedeva", "--params", "0.1,0.5,0.5,0.5,0.5", "--epsilon", "5", "--out", s(&out)]).0, 3);
}

#[test]
fn trace_reduced_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"labels":["x0","x1","y0","y1","z0","z1"],
            "points":[[0,0,0],[1,0,0],[0.3,-0.5,0],[0.2,0.6,0],[0.4,0.1,-0.4],[0.3,0.05,0.5]]}"#,
    );
    let (code, report, _) = run(&["trace", s(&cfg), "--params", "0,0.4,0.5,0.5,0.5"]);
    assert_eq!(code, 0);
    assert_eq!(report["result"]["reduced"], true);
    let (code, report, _) = run(&["trace", s(&cfg), "--params", "0.3,0.4,0.5,0.6,0.5"]);
    assert_eq!(code, 0);
    assert!(report["result"]["min_normalized_residual"].as_f64().unwrap() >= -1e-9);
    assert_eq!(run(&["trace", s(&cfg)]).0, 3);
}

#[test]
fn graph_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let sq = write(dir.path(), "sq.json", SQUARE);
    let (code, report, _) = run(&["graph", s(&sq), "--graph", "cycle:4"]);
    assert_eq!(code, 0);
    assert_eq!(report["result"]["gram_verified"], true);

    let space = write(dir.path(), "hard.json", HARD_SPACE);
    let graph = write(dir.path(), "hard_graph.json", HARD_GRAPH);
    let (code, report, _) = run(&["graph", s(&space), "--graph", s(&graph), "--max-iter", "1"]);
    assert_eq!(code, 2);
    assert_eq!(report["verdict"], "unknown");
    let (code, report, _) = run(&["graph", s(&space), "--graph", s(&graph)]);
    assert_eq!(code, 1);
    assert_eq!(report["result"]["outcome"]["check"]["valid"], true);

    assert_eq!(run(&["graph", s(&sq), "--graph", "cycle:3"]).0, 3);
    assert_eq!(run(&["graph", s(&sq), "--graph", "cycle:4", "--map", "a,b,c,zz"]).0, 3);
}

#[test]
fn reports_are_deterministic_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let oct = write(dir.path(), "oct.json", OCTAHEDRON_6);
    let strip = |mut v: Value| {
        v["timings_ms"] = Value::Null;
        v["args"] = Value::Null;
        v
    };
    let a = run(&["check", s(&oct), "--family", "ann", "--samples", "6", "--seed", "3", "--jobs", "1"]);
    let b = run(&["check", s(&oct), "--family", "ann", "--samples", "6", "--seed", "3", "--jobs", "4"]);
    assert_eq!(a.0, b.0);
    assert_eq!(strip(a.1.clone()), strip(b.1));
    assert_eq!(a.1["seed"], 3);
}

#[test]
fn report_can_go_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let sq = write(dir.path(), "sq.json", SQUARE);
    let out = dir.path().join("report.json");
    let o = bin().args(["check", s(&sq), "--family", "boxtimes", "--out", s(&out)]).output().unwrap();
    assert!(o.stdout.is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["command"], "check");
    assert_eq!(report["exit_code"], 0);
    assert!(report["input"]["sha256"].as_str().unwrap().len() == 64);
}
