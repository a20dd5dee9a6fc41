use std::path::Path;
use std::process::{Command, Output};

fn fou(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fou")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn constants_text_and_json() {
    let o = fou(&["constants", "--h", "0.6"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("sigma_h_sq"));
    let o = fou(&["constants", "--h", "0.6", "--theta", "2", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["theta"], 2.0);
    assert!((v["sigma_h_sq"].as_f64().unwrap() - 3.130495168499706).abs() < 1e-12);
    let o = fou(&["constants", "--h", "0.5", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["d_h"].is_null());
}

#[test]
fn constants_rejects_bad_hurst() {
    assert_eq!(fou(&["constants", "--h", "1.5"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(fou(&["simulate", "--h", "0.6"]).status.code(), Some(2));
    assert_eq!(fou(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn simulate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("path.csv");
    let csv_s = csv.to_str().unwrap();
    let o = fou(&[
        "simulate", "--h", "0.6", "--theta", "1", "--sigma", "1", "--t", "50", "--delta", "0.01", "--seed", "3",
        "--out", csv_s,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,x\n"));
    assert_eq!(text.lines().count(), 5002);

    for est in ["tilde", "hat-prime"] {
        let o = fou(&["estimate", "--estimator", est, "--in", csv_s, "--sigma", "1", "--h", "0.6"]);
        assert_eq!(o.status.code(), Some(0));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert!(v["estimate"].as_f64().unwrap().is_finite());
    }
    let o = fou(&[
        "estimate", "--estimator", "hat-oracle", "--in", csv_s, "--sigma", "1", "--h", "0.6", "--theta-true", "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    // the oracle needs the true drift
    let o = fou(&["estimate", "--estimator", "hat-oracle", "--in", csv_s, "--sigma", "1", "--h", "0.6"]);
    assert_eq!(o.status.code(), Some(2));
    // forward sums are only valid for H = 1/2
    let o = fou(&["estimate", "--estimator", "hat-ito", "--in", csv_s, "--sigma", "1", "--h", "0.6"]);
    assert_eq!(o.status.code(), Some(2));
    // missing input file
    let o = fou(&["estimate", "--estimator", "tilde", "--in", "/nonexistent.csv", "--sigma", "1", "--h", "0.6"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_unstable_scheme_is_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let o = fou(&[
        "simulate", "--h", "0.6", "--theta", "200", "--sigma", "1", "--t", "1", "--delta", "0.01", "--seed", "1",
        "--scheme", "euler-langevin", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn degenerate_path_is_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("zero.csv");
    std::fs::write(&csv, "t,x\n0,0\n0.5,0\n1,0\n").unwrap();
    let o = fou(&["estimate", "--estimator", "hat-prime", "--in", csv.to_str().unwrap(), "--sigma", "1", "--h", "0.6"]);
    assert_eq!(o.status.code(), Some(3));
}

fn write_config(dir: &Path, n_reps: usize, extra: &str) -> std::path::PathBuf {
    let cfg = dir.join("cfg.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"kind": "ergodic", "params": {{"theta": 1.0, "sigma": 1.0, "h": 0.6}},
  "t_values": [5.0, 10.0], "delta": 0.01, "n_reps": {n_reps}, "master_seed": 11,
  "estimator": "tilde", "output_path": "{}"{extra}}}"#,
            dir.join("default-out").display()
        ),
    )
    .unwrap();
    cfg
}

#[test]
fn experiment_writes_reports_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 3, "");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = fou(&["experiment", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("low power"));
    }
    let csv_a = std::fs::read(a.join("records.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.join("records.csv")).unwrap());
    assert_eq!(String::from_utf8_lossy(&csv_a).lines().count(), 7);
    assert!(a.join("report.json").exists());

    // without --out the config's output_path is used
    let o = fou(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("default-out/records.csv").exists());
}

#[test]
fn experiment_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 3, r#", "thetaa": 1"#);
    let o = fou(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("thetaa"));
}

#[test]
fn experiment_verdict_failure_exits_1() {
    // At T = 1 the pathwise estimator is far from 0, so the negative-control
    // bound fails.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"kind": "consistency", "params": {"theta": 1.0, "sigma": 1.0, "h": 0.6},
  "t_values": [0.5, 1.0], "delta": 0.01, "n_reps": 40, "master_seed": 5,
  "estimator": "hat-prime", "output_path": "x"}"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = fou(&["experiment", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}
