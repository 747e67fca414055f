use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deflatecrb"))
        .args(args)
        .env_remove("DEFLATECRB_WORKERS")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn bound_moderate_n_near_closed_form() {
    let v = json(&[
        "bound", "--n", "100", "--la", "10", "--lb", "10", "--k", "400", "--snr-db", "10", "--draws",
        "50", "--json",
    ]);
    let c = v["c_deflated"]["mean"].as_f64().unwrap();
    assert!((c - 0.0125).abs() <= 0.1 * 0.0125, "{c}");
    assert_eq!(v["c_deflated_inf"].as_f64().unwrap(), 0.0125);
    let human = run(&["bound", "--n", "100", "--la", "10", "--lb", "10", "--draws", "5"]);
    assert!(human.status.success());
    let text = String::from_utf8_lossy(&human.stdout);
    assert!(text.contains("deflated") && text.contains("joint") && text.contains("ideal"));
}

#[test]
fn bound_without_interference_equals_ideal() {
    let v = json(&["bound", "--n", "80", "--la", "8", "--lb", "0", "--draws", "3", "--json"]);
    let d = v["c_deflated"]["mean"].as_f64().unwrap();
    let i = v["c_ideal"]["mean"].as_f64().unwrap();
    assert!((d - i).abs() <= 1e-9 * i);
}

#[test]
fn bound_usage_errors_exit_two() {
    let out = run(&["bound", "--la", "10", "--lb", "10"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(code(&run(&["bound", "--n", "10", "--la", "6", "--lb", "6"])), 2);
    assert_eq!(code(&run(&["bound", "--n", "10", "--la", "x", "--lb", "6"])), 2);
}

#[test]
fn mp_closed_forms() {
    let v = json(&["mp", "--rho-tilde", "9", "--moments-up-to", "2", "--json"]);
    assert_eq!(v["lambda_minus"].as_f64().unwrap(), 4.0);
    assert_eq!(v["lambda_plus"].as_f64().unwrap(), 16.0);
    assert!((v["stieltjes_at_zero"].as_f64().unwrap() - 0.125).abs() < 1e-15);
    let m: Vec<f64> = v["moments"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(m, vec![9.0, 90.0]);
    let human = run(&["mp", "--rho-tilde", "9", "--moments-up-to", "2"]);
    let text = String::from_utf8_lossy(&human.stdout);
    assert!(text.contains("S(0) = 0.125") && text.contains("moment 2 = 90"));
}

#[test]
fn mp_rejects_negative_ratio() {
    assert_eq!(code(&run(&["mp", "--rho-tilde", "-1"])), 2);
    let v = json(&["mp", "--rho-tilde", "0.5", "--json"]);
    assert!(v["stieltjes_at_zero"].is_null());
    assert_eq!(v["zero_mass"].as_f64().unwrap(), 0.5);
}

#[test]
fn lemma1_gap_small() {
    let v = json(&["lemma1", "--n", "2000", "--la", "200", "--lb", "200", "--trials", "20", "--json"]);
    assert!(v["rel_gap_inverse_trace"].as_f64().unwrap() <= 0.02);
    assert!(v["rel_gap_trace"].as_f64().unwrap() <= 0.02);
}

#[test]
fn lemma1_writes_per_trial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("l1.csv");
    let o = run(&[
        "lemma1", "--n", "200", "--la", "20", "--lb", "20", "--trials", "4", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(String::from_utf8_lossy(&o.stdout).contains("gap"));
}

fn figure_csv(dir: &Path, name: &str, workers: &str) -> Vec<u8> {
    let path = dir.join(name);
    let out = run(&[
        "figure", "--id", "4", "--out", path.to_str().unwrap(), "--seed", "7", "--trials", "20",
        "--workers", workers,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 9);
    std::fs::read(path).unwrap()
}

#[test]
fn figure_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = figure_csv(dir.path(), "a.csv", "1");
    let b = figure_csv(dir.path(), "b.csv", "3");
    assert_eq!(a, b);
    assert!(String::from_utf8_lossy(&a).starts_with("figure_id,n,k,l_a,l_b,snr_db,estimator"));
}

#[test]
fn figure_rejects_unknown_id() {
    assert_eq!(code(&run(&["figure", "--id", "7"])), 2);
    assert_eq!(code(&run(&["figure", "--id", "4", "--estimators", "lasso"])), 2);
}

#[test]
fn simulate_missing_config_exits_two() {
    assert_eq!(code(&run(&["simulate", "--config", "missing.toml"])), 2);
}

const SMALL: &str = r#"
[dims]
n = 30
k = 90
la = 3
lb = 3

[noise]
snr_db = [10, 20]

[run]
trials = 6
seed = 1
estimators = ["omp", "oracle_ls"]
deflation = "both"
"#;

#[test]
fn simulate_writes_json_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let out_path = dir.path().join("s.json");
    let out = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 2);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 8);
    assert_eq!(v["scenario"]["trials"].as_u64().unwrap(), 6);

    let stdout_json = json(&["simulate", "--config", cfg.to_str().unwrap(), "--trials", "2", "--json"]);
    assert_eq!(stdout_json["scenario"]["trials"].as_u64().unwrap(), 2);
}

#[test]
fn simulate_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, SMALL.replace("deflation = \"both\"", "deflation = \"maybe\"")).unwrap();
    assert_eq!(code(&run(&["simulate", "--config", cfg.to_str().unwrap()])), 2);
    std::fs::write(&cfg, SMALL.replace("k = 90", "k = 20")).unwrap();
    assert_eq!(code(&run(&["simulate", "--config", cfg.to_str().unwrap()])), 2);
    std::fs::write(&cfg, SMALL).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_deflatecrb"))
        .args(["simulate", "--config", cfg.to_str().unwrap()])
        .env("DEFLATECRB_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn simulate_failed_trials_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fragile.toml");
    std::fs::write(
        &cfg,
        r#"
[dims]
n = 3
k = 4
la = 1
lb = 1

[noise]
snr_db = [10]

[run]
trials = 40
estimators = ["oracle_ls"]
prior = "rademacher"
dictionary = "rademacher"
"#,
    )
    .unwrap();
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("trials failed"));
}
