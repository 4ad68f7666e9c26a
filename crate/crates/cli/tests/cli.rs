use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cavity-squeeze"))
        .args(args)
        .current_dir(dir)
        .env_remove("CAVITY_SQUEEZE_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

const PUMP_FREE: &str = r#"{"n_modes": 2,
  "G": [[{"re": 1.0, "im": 0.0}, {"re": 0.3, "im": 0.2}], [{"re": 0.3, "im": -0.2}, {"re": 0.5, "im": 0.0}]],
  "F": [[{"re": 0.0, "im": 0.0}, {"re": 0.0, "im": 0.0}], [{"re": 0.0, "im": 0.0}, {"re": 0.0, "im": 0.0}]],
  "gamma": [1.0, 0.4]}"#;

#[test]
fn complex_verdict_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["classify", "--scenario", "optomech"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["verdict"], "ComplexCovariance");
    assert!(dir.path().join("cavity-squeeze.manifest.json").exists());
}

#[test]
fn pump_free_file_is_trivially_real() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("empty.json"), PUMP_FREE).unwrap();
    let out = run_in(dir.path(), &["classify", "--model-file", "empty.json"]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["verdict"], "TriviallyReal_FZero");
    assert_eq!(report["tol"], 1e-9);
}

#[test]
fn verify_flag_cross_checks_the_covariance() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["classify", "--scenario", "two_mode_chi3_asymmetric", "--verify"]);
    assert_eq!(out.status.code(), Some(2));
    let v = &stdout_json(&out)["verification"];
    assert_eq!(v["consistent"], true);
    assert!(v["max_relative_imaginary"].as_f64().unwrap() > 1e-3);
}

#[test]
fn single_mode_homodyne_coincides_with_optimum() {
    let dir = TempDir::new().unwrap();
    let out = run_in(
        dir.path(),
        &["spectrum", "--scenario", "single_mode_opo", "--omega-min", "0", "--omega-max", "3", "--omega-count", "301", "--lo-phase", "scan"],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("omega,optimal_db,hd_db,hidden_fraction,lo_phase"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 301);
    for r in &rows {
        assert!((r[1] - r[2]).abs() < 1e-6, "omega {}: {} vs {}", r[0], r[1], r[2]);
    }
    // 17 significant digits
    assert!(text.contains("1.0000000000000001e-1,"));
}

#[test]
fn spectrum_json_carries_metadata() {
    let dir = TempDir::new().unwrap();
    let out = run_in(
        dir.path(),
        &["spectrum", "--scenario", "dual_pump_suppressed", "--omega", "0,0.5", "--output", "json"],
    );
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["metadata"]["modes"], serde_json::json!([1]));
    assert_eq!(doc["metadata"]["verdict"], "RealCovariance");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn matrix_dump_has_row_major_columns() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["spectrum", "--scenario", "optomech", "--omega", "-1,1", "--matrix", "sigma"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 1 + 2 * 16);
    assert_eq!(&header[..3], ["omega", "sigma_0_0_re", "sigma_0_0_im"]);
    let rows: Vec<Vec<f64>> = text.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    // sigma(-w) is the conjugate of sigma(w)
    for k in 1..rows[0].len() {
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        assert!((rows[0][k] - sign * rows[1][k]).abs() <= 1e-12 * rows[1][k].abs().max(1.0));
    }
}

#[test]
fn unstable_model_is_a_numerical_failure() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["spectrum", "--scenario", "single_mode_opo", "--set", "g=2", "--omega", "0"]);
    assert_eq!(out.status.code(), Some(3));
    let manifest: Value = serde_json::from_str(&read(dir.path().join("cavity-squeeze.manifest.json"))).unwrap();
    assert_eq!(manifest["exit_code"], 3);
    assert!(manifest["error"].as_str().unwrap().contains("not stable"));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run_in(dir.path(), &["spectrum"]).status.code(), Some(1));
    assert_eq!(run_in(dir.path(), &["classify", "--scenario", "nope"]).status.code(), Some(1));
    assert_eq!(run_in(dir.path(), &["classify", "--scenario", "optomech", "--set", "bogus=1"]).status.code(), Some(1));
    assert_eq!(run_in(dir.path(), &["hd", "--model-file", "missing.json", "--omega", "1"]).status.code(), Some(1));
    assert_eq!(run_in(dir.path(), &["--version"]).status.code(), Some(0));
}

#[test]
fn outputs_are_deterministic_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let args = ["spectrum", "--scenario", "two_mode_chi3_asymmetric", "--omega-count", "97", "--output", "json"];
    let one = Command::new(env!("CARGO_BIN_EXE_cavity-squeeze"))
        .args(args)
        .current_dir(dir.path())
        .env("CAVITY_SQUEEZE_THREADS", "1")
        .output()
        .unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_cavity-squeeze"))
        .args(args)
        .current_dir(dir.path())
        .env("CAVITY_SQUEEZE_THREADS", "4")
        .output()
        .unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn manifest_replay_reproduces_output() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["hd", "--scenario", "two_mode_chi3_asymmetric", "--seed", "7", "--out", "first.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let manifest: Value = serde_json::from_str(&read(dir.path().join("first.csv.manifest.json"))).unwrap();
    assert_eq!(manifest["config"]["command"], "hd");
    assert_eq!(manifest["config"]["args"]["seed"], 7);
    assert!(manifest["timings"]["compute_seconds"].is_number());
    assert!(manifest["version"].is_string());

    let out = run_in(dir.path(), &["replay", "first.csv.manifest.json", "--out", "second.csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read(dir.path().join("first.csv")), read(dir.path().join("second.csv")));
    let replayed: Value = serde_json::from_str(&read(dir.path().join("second.csv.manifest.json"))).unwrap();
    let mut expected = manifest["config"].clone();
    expected["args"]["output"]["out"] = "second.csv".into();
    assert_eq!(replayed["config"], expected);
}

#[test]
fn exported_scenario_is_consumable() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["scenario", "export", "two_mode_chi3_asymmetric", "--out", "chi3.json"]);
    assert_eq!(out.status.code(), Some(0));
    let direct = run_in(dir.path(), &["hd", "--scenario", "two_mode_chi3_asymmetric", "--omega", "0.1"]);
    let from_file = run_in(dir.path(), &["hd", "--model-file", "chi3.json", "--omega", "0.1"]);
    assert_eq!(direct.stdout, from_file.stdout);
    let valid = run_in(dir.path(), &["schema", "--validate", "chi3.json"]);
    assert_eq!(stdout_json(&valid)["valid"], true);
}

#[test]
fn invalid_model_fails_validation() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.json"), PUMP_FREE.replace("\"im\": -0.2", "\"im\": 0.9")).unwrap();
    let out = run_in(dir.path(), &["schema", "--validate", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["valid"], false);
    let schema = run_in(dir.path(), &["schema"]);
    let doc = stdout_json(&schema);
    assert!(doc["required"].as_array().unwrap().iter().any(|k| k == "gamma"));
}

#[test]
fn scenario_list_run_and_scan() {
    let dir = TempDir::new().unwrap();
    let list = run_in(dir.path(), &["scenario", "list", "--output", "json"]);
    let names: Vec<String> = stdout_json(&list)
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["name"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(names.len(), 6);
    assert!(names.contains(&"dual_pump".to_string()));

    let run = run_in(dir.path(), &["scenario", "run", "dual_pump", "--omega-count", "11", "--output", "json"]);
    assert_eq!(run.status.code(), Some(0));
    let doc = stdout_json(&run);
    assert_eq!(doc["metadata"]["formal"], true);
    let share = doc["metadata"]["reference"]["hidden_share"].as_f64().unwrap();
    assert!(share > 0.1 && share < 0.2, "{share}");

    let scan = run_in(
        dir.path(),
        &["scan", "--scenario", "two_mode_chi3_asymmetric", "--param", "g22", "--values", "0.8,0.9,1.0"],
    );
    let text = String::from_utf8(scan.stdout).unwrap();
    let verdicts: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(verdicts, ["ComplexCovariance", "ComplexCovariance", "RealCovariance"]);
}

#[test]
fn selftest_passes() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["selftest", "--count", "60", "--output", "json"]);
    let doc = stdout_json(&out);
    for c in doc["checks"].as_array().unwrap() {
        assert_eq!(c["passed"], true, "{c}");
    }
    assert_eq!(out.status.code(), Some(0));
}
