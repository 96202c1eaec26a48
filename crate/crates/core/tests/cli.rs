//! Flag parsing, file wiring, and exit codes. Everything substantive lives
//! in the library; these only exercise the shell around it.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_budgetsvm"))
}

fn synth(dir: &Path, n: usize) -> PathBuf {
    let out = dir.join("data.txt");
    let status = bin()
        .args(["synth", "--n", &n.to_string(), "--d", "3", "--seed", "1"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    out
}

#[test]
fn missing_data_flag_exits_2() {
    let out = bin()
        .args(["train", "--test", "x", "--algo", "bsca", "--out", "y"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_algorithm_exits_2() {
    let out = bin()
        .args(["train", "--data", "x", "--test", "x", "--algo", "smo", "--out", "y"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn nonexistent_data_file_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["train", "--algo", "sca", "--data", "/no/such/file", "--test", "/no/such/file"])
        .arg("--out")
        .arg(dir.path().join("r.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synth_output_is_parseable_with_n_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = synth(dir.path(), 100);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 100);
    assert!(budgetsvm::data::parse_dataset_str(&text).is_ok());
}

#[test]
fn train_writes_expected_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 50);
    let out = dir.path().join("run.csv");
    let status = bin()
        .args(["train", "--algo", "bsca", "--budget", "10", "--epochs", "6", "--log-every", "2"])
        .arg("--data")
        .arg(&data)
        .arg("--test")
        .arg(&data)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(budgetsvm::diagnostics::EpochRecord::CSV_HEADER));
    assert_eq!(lines.count(), 3); // epochs 2, 4, 6
}

#[test]
fn model_out_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 40);
    let model_path = dir.path().join("model.txt");
    let status = bin()
        .args(["train", "--algo", "bsca", "--budget", "8", "--epochs", "3"])
        .arg("--data")
        .arg(&data)
        .arg("--test")
        .arg(&data)
        .arg("--out")
        .arg(dir.path().join("r.csv"))
        .arg("--model-out")
        .arg(&model_path)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&model_path).unwrap();
    let model = budgetsvm::BudgetModel::load(&text).unwrap();
    assert!(!model.is_empty() && model.len() <= 8);
}

#[test]
fn plot_flag_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 40);
    let plot = dir.path().join("curves.svg");
    let status = bin()
        .args(["train", "--algo", "sgd", "--epochs", "3"])
        .arg("--data")
        .arg(&data)
        .arg("--test")
        .arg(&data)
        .arg("--out")
        .arg(dir.path().join("r.csv"))
        .arg("--plot")
        .arg(&plot)
        .status()
        .unwrap();
    assert!(status.success());
    let svg = std::fs::read_to_string(&plot).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn sweep_writes_one_csv_per_budget() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 60);
    let out = dir.path().join("sweep.csv");
    let status = bin()
        .args(["sweep", "--budgets", "5,10", "--algo", "bsca", "--epochs", "2"])
        .arg("--data")
        .arg(&data)
        .arg("--test")
        .arg(&data)
        .arg("--out")
        .arg(&out)
        .env("BUDGETSVM_THREADS", "2")
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("sweep_B5.csv").exists());
    assert!(dir.path().join("sweep_B10.csv").exists());
    assert!(!out.exists());
}

#[test]
fn sweep_with_non_integer_budget_exits_2() {
    let out = bin()
        .args(["sweep", "--budgets", "200,abc", "--algo", "bsca"])
        .args(["--data", "x", "--test", "x", "--out", "y"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_unknown_suite_exits_2() {
    let out = bin().args(["verify", "--suite", "lemma9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_known_suite_passes() {
    let out = bin().args(["verify", "--suite", "lemma1", "--seed", "7"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("lemma1: pass"));
}

#[test]
fn repeated_train_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 50);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = bin()
            .args(["train", "--algo", "bsgd", "--budget", "10", "--epochs", "4", "--seed", "9"])
            .arg("--data")
            .arg(&data)
            .arg("--test")
            .arg(&data)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(&out).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}
