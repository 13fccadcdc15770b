use std::path::Path;
use std::process::{Command, Output};

fn clutchsim(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clutchsim"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(clutchsim(&["frobnicate"], tmp.path()).status.code(), Some(1));
}

#[test]
fn bad_configuration_flag_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = clutchsim(&["simulate", "--configuration", "C"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let o = clutchsim(&["--help"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("simulate"));
}

#[test]
fn config_error_names_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let text = clutchsim::config::DEFAULT_CONFIG.replace("shoe_count = 3", "shoe_count = 0");
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, &text).unwrap();
    let line = text.lines().position(|l| l.starts_with("shoe_count")).unwrap() + 1;
    let o = clutchsim(&["simulate", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(&format!("line {line}")), "{err}");
}

#[test]
fn missing_config_file_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = clutchsim(&["simulate", "--config", "/no/such/file.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn predict_without_model_fails_at_runtime() {
    let tmp = tempfile::tempdir().unwrap();
    let o = clutchsim(&["predict", "--mass", "0.2", "--preload", "100"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_lists_missing_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = clutchsim(&["simulate"], tmp.path());
    assert!(o.status.success());
    let o = clutchsim(&["report"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("trace_B.csv") && err.contains("dataset.csv"), "{err}");
    assert!(!err.contains("trace_A.csv"), "{err}");
}

#[test]
fn simulate_writes_trace_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let o = clutchsim(&["simulate", "--configuration", "B", "--seed", "9"], tmp.path());
    assert!(o.status.success());
    let trace = std::fs::read_to_string(tmp.path().join("trace_B.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), clutchsim::sim::TRACE_HEADER);
    assert!(trace.contains("LockedSecond"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("trace_B.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["configuration"], "B");
    assert_eq!(manifest["command"], "simulate");
}
