use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_dirac-spectra");

fn run(dir: &Path, config: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(BIN);
    if let Some(text) = config {
        let path = dir.join("config.json");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.args(args).output().expect("binary runs")
}

fn ok_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const SMOOTH: &str = r#"{"potential": {"kind": "builtin", "name": "endpoint-smooth", "p": [1, 0], "q": [0, 1]},
    "n_range": [-15, 15]}"#;

#[test]
fn classify_periodic_default() {
    let d = tempfile::tempdir().unwrap();
    let v = ok_json(&run(d.path(), None, &["classify"]));
    assert_eq!(v["command"], "classify");
    assert_eq!(v["result"]["subtype"], "periodic");
    assert_eq!(v["result"]["periodic_type"], true);
    assert_eq!(v["config"]["n_range"], serde_json::json!([-10, 10]));
}

#[test]
fn classify_strongly_regular_gives_note() {
    let d = tempfile::tempdir().unwrap();
    let cfg = r#"{"boundary": [[[1,0],[0,0],[2,0],[0,0]], [[0,0],[1,0],[0,0],[1,0]]]}"#;
    let v = ok_json(&run(d.path(), Some(cfg), &["classify"]));
    assert_eq!(v["result"]["strongly_regular"], true);
    assert!(v["result"]["note"].as_str().unwrap().starts_with("strongly regular"));
    let v = ok_json(&run(d.path(), Some(cfg), &["diagnose"]));
    assert!(v["result"]["verdict"].is_null());
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let dependent = r#"{"boundary": [[[1,0],[0,0],[1,0],[0,0]], [[2,0],[0,0],[2,0],[0,0]]]}"#;
    assert_eq!(run(d.path(), Some(dependent), &["classify"]).status.code(), Some(3));
    let irregular = r#"{"boundary": [[[1,0],[0,0],[0,0],[0,0]], [[0,0],[0,0],[0,0],[1,0]]]}"#;
    assert_eq!(run(d.path(), Some(irregular), &["spectrum"]).status.code(), Some(3));
    assert_eq!(run(d.path(), Some("{\"grid\": "), &["classify"]).status.code(), Some(2));
    assert_eq!(run(d.path(), Some(r#"{"gird": 5}"#), &["classify"]).status.code(), Some(2));
    assert_eq!(run(d.path(), None, &["classify", "--n-range", "3:1"]).status.code(), Some(2));
    let pole = run(d.path(), Some(r#"{"lambda": [2, 0]}"#), &["green"]);
    assert_eq!(pole.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&pole.stderr).contains("pole"));
    let missing = run(d.path(), None, &["--config", "/nonexistent/cfg.json", "classify"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn spectrum_of_free_periodic_problem() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("out");
    let v = ok_json(&run(d.path(), None, &["spectrum", "--n-range", "-3:3", "--out", out.to_str().unwrap()]));
    let entries = v["result"]["spectrum"]["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 14);
    for e in entries {
        let n = e["n"].as_i64().unwrap() as f64;
        let lam = e["lambda"].as_array().unwrap();
        assert!((lam[0].as_f64().unwrap() - 2.0 - 2.0 * n).abs() < 1e-9);
        assert_eq!(e["multiplicity"], 2);
    }
    assert!(out.join("report.json").exists());
    let csv = std::fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert!(csv.lines().count() > 14);
}

#[test]
fn diagnose_smooth_is_riesz() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("o");
    let v = ok_json(&run(d.path(), Some(SMOOTH), &["diagnose", "--out", out.to_str().unwrap()]));
    assert_eq!(v["result"]["is_riesz"], true);
    assert_eq!(v["result"]["lemmas_agree"], true);
    assert!(out.join("ratios.csv").exists());
}

#[test]
fn counterexample_desk_scale_writes_files() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("ce");
    let cfg = r#"{"ks": [1, 2], "theorem2": {"k_terms": 2}}"#;
    let v = ok_json(&run(d.path(), Some(cfg), &["counterexample", "--desk-scale", "--out", out.to_str().unwrap()]));
    let r = &v["result"];
    assert_eq!(r["plan"]["desk_scale"], true);
    assert_eq!(r["plan"]["a_seq"], serde_json::json!([1, 40, 1600]));
    let slope = r["divergence"]["slope_ratio"].as_f64().unwrap();
    assert!((slope - 0.5).abs() < 0.15, "slope {slope}");
    for f in ["built.json", "divergence.csv", "report.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn counterexample_full_scale_at_n1_reports_bound_failure() {
    let d = tempfile::tempdir().unwrap();
    let cfg = r#"{"ks": [], "theorem2": {"k_terms": 1}}"#;
    let o = run(d.path(), Some(cfg), &["counterexample"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn asym_check_reports_second_order() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("a");
    let v = ok_json(&run(d.path(), Some(SMOOTH), &["asym-check", "--out", out.to_str().unwrap()]));
    for key in ["order12", "order21"] {
        let o = v["result"][key].as_f64().unwrap();
        assert!((o - 2.0).abs() < 0.1, "{key} {o}");
    }
    assert!(out.join("asymptotics.csv").exists());
}

#[test]
fn green_writes_grids() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("g");
    let v = ok_json(&run(d.path(), Some(r#"{"grid": 17}"#), &["green", "--out", out.to_str().unwrap()]));
    assert_eq!(v["result"]["hjk_norms"]["m"], 17);
    let g = std::fs::read_to_string(out.join("green.csv")).unwrap();
    assert!(g.lines().count() > 17 * 17);
    assert!(out.join("h.csv").exists());
    let even = run(d.path(), Some(r#"{"grid": 16}"#), &["green"]);
    assert_eq!(even.status.code(), Some(3));
}

#[test]
fn expand_partial_sums_approach_norm() {
    let d = tempfile::tempdir().unwrap();
    let v = ok_json(&run(d.path(), Some(SMOOTH), &["expand", "--n-range", "-6:6"]));
    let r = &v["result"];
    let norm = r["f_norm"].as_f64().unwrap();
    let blocked: Vec<f64> = r["blocked"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(blocked.len(), 13);
    let last = *blocked.last().unwrap();
    assert!(last < 1.05 * norm && last > 0.95 * norm);
}

#[test]
fn runs_are_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let a = run(d.path(), Some(SMOOTH), &["spectrum", "--n-range", "-4:4"]);
    let b = run(d.path(), Some(SMOOTH), &["spectrum", "--n-range", "-4:4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn tol_flag_is_echoed() {
    let d = tempfile::tempdir().unwrap();
    let v = ok_json(&run(d.path(), None, &["classify", "--tol", "1e-9"]));
    assert_eq!(v["config"]["spectrum"]["tol_root"].as_f64(), Some(1e-9));
}
