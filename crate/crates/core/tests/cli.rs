use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn teon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teon")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("missing {key} in\n{text}"))
        .parse()
        .unwrap()
}

fn example_configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn construct_maxgain_prints_root_k_ratio() {
    let out = teon(&["construct-maxgain", "--m", "8", "--n", "8", "--K", "4", "--mode", "1", "--seed", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!((value(&text, "teon1_over_muon") - 2.0).abs() <= 1e-9);
    assert!((value(&text, "teon2_over_muon") - 1.0).abs() <= 1e-9);
}

#[test]
fn construct_maxgain_rejects_bad_arguments() {
    let too_many = teon(&["construct-maxgain", "--m", "2", "--n", "2", "--K", "4", "--mode", "1"]);
    assert_eq!(too_many.status.code(), Some(2));
    let mode_three = teon(&["construct-maxgain", "--mode", "3"]);
    assert_eq!(mode_three.status.code(), Some(2));
}

#[test]
fn check_suite_passes() {
    let out = teon(&["check"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(!stdout(&out).contains("FAIL"));
}

#[test]
fn run_writes_csvs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = example_configs().join("aligned_teon.toml");
    let out = teon(&["run", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(value(&stdout(&out), "best_loss") <= 1e-3);
    let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("# teon-metrics v1\nstep,loss,"));
    assert!(dir.path().join("alignment.csv").exists());
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "steps = 5\nlearning_rate = 0.1\n[task]\nkind = \"quadratic\"\n[optimizer]\noptimizer = \"muon\"\neta = 0.1\n")
        .unwrap();
    let out = teon(&["run", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rate"));
}

#[test]
fn sweep_over_examples_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = teon(&[
        "sweep",
        "--config-dir",
        example_configs().to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(value(&text, "failed"), 0.0);
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + value(&text, "runs") as usize);
}

#[test]
fn align_demo_records_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let out = teon(&["align-demo", "--steps", "20", "--every", "10", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert!(value(&stdout(&out), "alignment_records") > 0.0);
    let csv = fs::read_to_string(dir.path().join("alignment.csv")).unwrap();
    assert!(csv.starts_with("step,pair_id,left_align,right_align,sigma_gap\n"));
}
