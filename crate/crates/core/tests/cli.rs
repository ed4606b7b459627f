use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn skorokhod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skorokhod"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn triangle_pair(dir: &Path) -> (PathBuf, PathBuf) {
    (
        write(dir, "a.csv", "t,x\n0,0\n1,1\n2,0\n"),
        write(dir, "b.csv", "t,x\n0,0\n1.2,1\n2,0\n"),
    )
}

#[test]
fn dist_of_identical_traces_is_zero() {
    let dir = TempDir::new().unwrap();
    let (a, _) = triangle_pair(dir.path());
    let out = skorokhod(&["dist", s(&a), s(&a)]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["distance"].as_f64().unwrap() <= 1e-4);
}

#[test]
fn dist_of_constants_is_their_gap() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.csv", "0,1\n4,1\n");
    let b = write(dir.path(), "b.csv", "0,3\n4,3\n");
    let out = skorokhod(&["dist", s(&a), s(&b), "--tol", "1e-6"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["distance"].as_f64().unwrap() - 2.0).abs() <= 1e-6);
}

#[test]
fn dist_reports_sampling_adjustment() {
    let dir = TempDir::new().unwrap();
    let (a, b) = triangle_pair(dir.path());
    let out = skorokhod(&["dist", s(&a), s(&b), "--dsamp", "0.05"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let d = v["distance"].as_f64().unwrap();
    assert!((v["adjusted_distance"].as_f64().unwrap() - (d + 0.1)).abs() < 1e-12);
}

#[test]
fn check_exit_codes_follow_the_verdict() {
    let dir = TempDir::new().unwrap();
    let (a, b) = triangle_pair(dir.path());
    assert_eq!(code(&skorokhod(&["check", s(&a), s(&b), "--delta", "0.5"])), 0);
    assert_eq!(code(&skorokhod(&["check", s(&a), s(&b), "--delta", "0.01"])), 3);
    assert_eq!(
        code(&skorokhod(&["check", s(&a), s(&b), "--delta", "0.01", "--window", "1"])),
        3
    );
}

#[test]
fn input_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let (a, _) = triangle_pair(dir.path());
    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&skorokhod(&["dist", s(&a), s(&missing)])), 2);
    let bad = write(dir.path(), "bad.csv", "0,1\n0,2\n");
    assert_eq!(code(&skorokhod(&["dist", s(&a), s(&bad)])), 2);
    assert_eq!(code(&skorokhod(&["check", s(&a), s(&a), "--delta", "-1"])), 2);
    assert_eq!(code(&skorokhod(&["nonsense"])), 2);
}

#[test]
fn relax_widens_bounded_until() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "f.mtl", "(P) U[1,2] (R)");
    let out = skorokhod(&["relax", "--formula", s(&f), "--delta", "0.1", "--interval", "0", "5"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("2.2"), "{text}");
    assert!(text.contains("0.8"), "{text}");
}

#[test]
fn relax_takes_domain_from_traces() {
    let dir = TempDir::new().unwrap();
    let (a, b) = triangle_pair(dir.path());
    let f = write(dir.path(), "f.mtl", "F[0.5,1] (P)");
    let out = skorokhod(&[
        "relax",
        "--formula",
        s(&f),
        "--delta",
        "0.25",
        "--hull-from",
        s(&a),
        s(&b),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("1.5"));
}

#[test]
fn eval_on_propositional_trace() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "f.mtl", "(P) U[1,2] (R)");
    let sat = write(
        dir.path(),
        "sat.json",
        r#"{"pieces": [[0, ["P"]], [1.5, ["R"]]], "end": 3}"#,
    );
    let unsat = write(
        dir.path(),
        "unsat.json",
        r#"{"pieces": [[0, ["P"]], [2.5, ["R"]]], "end": 3}"#,
    );
    let out = skorokhod(&["eval", "--formula", s(&f), "--prop-trace", s(&sat)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("sat"));
    let out = skorokhod(&["eval", "--formula", s(&f), "--prop-trace", s(&unsat)]);
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).starts_with("unsat"));
}

#[test]
fn eval_on_real_trace_with_predicates() {
    let dir = TempDir::new().unwrap();
    let (a, _) = triangle_pair(dir.path());
    let f = write(dir.path(), "f.mtl", "F[0.5,1.5] (HIGH)");
    let preds = write(
        dir.path(),
        "p.json",
        r#"{"HIGH": {"coeffs": [1.0], "const": -0.9, "rel": ">="}}"#,
    );
    let out = skorokhod(&["eval", "--formula", s(&f), "--trace", s(&a), "--preds", s(&preds)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let missing = skorokhod(&["eval", "--formula", s(&f), "--trace", s(&a)]);
    assert_eq!(code(&missing), 2);
}

fn tank_config(delay: &str, delta: f64, iterations: usize) -> String {
    format!(
        r#"{{
  "system_a": {{"kind": "two_tank", "inflow": 1.0, "drain": [0.4, 0.4],
               "switch_level": [1.0, 1.0], "initial": [2.0, 2.0]}},
  "system_b": {{"kind": "two_tank", "inflow": 1.0, "drain": [0.4, 0.4],
               "switch_level": [1.0, 1.0], "initial": [2.0, 2.0]{delay}}},
  "input": {{"bases": [{{"kind": "constant", "channel": 0}},
                      {{"kind": "constant", "channel": 1}},
                      {{"kind": "constant", "channel": 2}}],
            "bounds": [[0.9, 1.1], [0.3, 0.4], [0.3, 0.4]],
            "horizon": 10.0, "sample_period": 0.5, "input_dim": 3}},
  "test": {{"delta_bound": {delta}, "max_iterations": {iterations}, "window": 40, "seed": 3}}
}}"#
    )
}

#[test]
fn conform_reports_violation() {
    let dir = TempDir::new().unwrap();
    let delay = r#", "delay": {"kind": "constant", "seconds": 0.5}"#;
    let cfg = write(dir.path(), "cfg.json", &tank_config(delay, 0.01, 20));
    let (report, log) = (dir.path().join("r.json"), dir.path().join("c.csv"));
    let out = skorokhod(&["conform", "--config", s(&cfg), "--out", s(&report), "--log", s(&log)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["verdict"], "violation");
    assert!(v["max_cost"].as_f64().unwrap() > 0.01);
    assert!(fs::read_to_string(&log)
        .unwrap()
        .starts_with("iteration,cost,max_cost,p0"));
}

#[test]
fn conform_reports_exhausted_budget() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "cfg.json", &tank_config("", 0.5, 4));
    let (report, log) = (dir.path().join("r.json"), dir.path().join("c.csv"));
    let out = skorokhod(&["conform", "--config", s(&cfg), "--out", s(&report), "--log", s(&log)]);
    assert_eq!(code(&out), 3);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["verdict"], "budget_exhausted");
    assert_eq!(v["iterations"], 4);
    assert_eq!(fs::read_to_string(&log).unwrap().lines().count(), 5);
}

#[test]
fn conform_rejects_bad_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "cfg.json", "{\"system_a\": 1}");
    assert_eq!(code(&skorokhod(&["conform", "--config", s(&cfg)])), 2);
}

#[test]
fn simulate_output_reads_back_as_trace() {
    let dir = TempDir::new().unwrap();
    let out_a = dir.path().join("tank.csv");
    let out_b = dir.path().join("tank_delayed.csv");
    let r = skorokhod(&["simulate", "--system", "tank", "-T", "5", "--out", s(&out_a)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let r = skorokhod(&["simulate", "--system", "tank-delayed", "-T", "5", "--out", s(&out_b)]);
    assert_eq!(code(&r), 0);
    let text = fs::read_to_string(&out_a).unwrap();
    assert!(text.starts_with("t,x0,x1"));
    let dist = skorokhod(&["dist", s(&out_a), s(&out_b)]);
    assert_eq!(code(&dist), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&dist)).unwrap();
    assert!(v["distance"].as_f64().unwrap() > 0.0);
}

#[test]
fn simulate_lqr_to_stdout() {
    let out = skorokhod(&["simulate", "--system", "lqr", "-T", "1", "--period", "0.1"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 12);
}
