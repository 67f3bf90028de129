use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use earncast::commands::read_records;

const BASE: &str = r#"
[paths]
schema = "data/schema.csv"
panel = "data/panel.csv"
meta = "data/meta.csv"
consensus = "data/consensus.csv"
output_dir = "results"

[backtest]
n_lags = 4
standardize = true
validation = { size = 3 }
search = { budget = 2 }
"#;

fn write_config(dir: &Path, synth: &str, train_len: usize) -> PathBuf {
    let path = dir.join("earncast.toml");
    std::fs::write(&path, format!("{BASE}train_len = {train_len}\n\n[synth]\n{synth}\n")).unwrap();
    path
}

fn run(config: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_earncast"))
        .arg("--config")
        .arg(config)
        .args(args)
        .output()
        .unwrap()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn synth_backtest_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n_companies = 40\nn_quarters = 30\nseed = 3", 24);
    assert_ok(&run(&cfg, &["synth"]));
    for f in ["schema.csv", "panel.csv", "meta.csv", "consensus.csv"] {
        assert!(tmp.path().join("data").join(f).exists(), "{f}");
    }
    assert!(tmp.path().join("results/ground_truth.csv").exists());

    assert_ok(&run(&cfg, &["--jobs", "2", "backtest"]));
    let results = tmp.path().join("results");
    let jsonl = std::fs::read_to_string(results.join("report.jsonl")).unwrap();
    let records = read_records(&jsonl).unwrap();
    assert_eq!(records.len(), 6);
    assert!(records.windows(2).all(|w| w[0].subset.test_quarter < w[1].subset.test_quarter));
    let sub = results.join("subsets/001");
    for f in ["model.txt", "pca.json", "trials.jsonl", "fill_report.jsonl", "fill_summary.json", "predictions.csv"] {
        assert!(sub.join(f).exists(), "{f}");
    }
    let written = std::fs::read_to_string(results.join("report.txt")).unwrap();
    for heading in ["Table 1", "Table 2", "Table 3", "Table 4"] {
        assert!(written.contains(heading), "{heading}");
    }

    std::fs::remove_file(results.join("report.txt")).unwrap();
    let out = run(&cfg, &["report"]);
    assert_ok(&out);
    assert_eq!(String::from_utf8_lossy(&out.stdout), written);
    assert_eq!(std::fs::read_to_string(results.join("report.txt")).unwrap(), written);
}

#[test]
fn too_few_quarters_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n_companies = 10\nn_quarters = 10", 24);
    let out = run(&cfg, &["synth"]);
    assert!(!out.status.success());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert!(!tmp.path().join("data/panel.csv").exists());
}

#[test]
fn one_quarter_past_the_window_gives_one_record() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n_companies = 30\nn_quarters = 81\nseed = 5", 80);
    assert_ok(&run(&cfg, &["synth"]));
    assert_ok(&run(&cfg, &["backtest"]));
    let jsonl = std::fs::read_to_string(tmp.path().join("results/report.jsonl")).unwrap();
    assert_eq!(read_records(&jsonl).unwrap().len(), 1);
}

#[test]
fn missing_consensus_file_warns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n_companies = 30\nn_quarters = 27\nseed = 2", 24);
    assert_ok(&run(&cfg, &["synth"]));
    std::fs::remove_file(tmp.path().join("data/consensus.csv")).unwrap();
    let out = run(&cfg, &["backtest"]);
    assert_ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("consensus"));
    let report = std::fs::read_to_string(tmp.path().join("results/report.txt")).unwrap();
    assert!(report.contains("n/a"));
}

#[test]
fn corrupted_record_names_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n_companies = 30\nn_quarters = 27\nseed = 4", 24);
    assert_ok(&run(&cfg, &["synth"]));
    assert_ok(&run(&cfg, &["backtest"]));
    let path = tmp.path().join("results/report.jsonl");
    let mut lines: Vec<String> = std::fs::read_to_string(&path).unwrap().lines().map(String::from).collect();
    assert!(lines.len() >= 2);
    let half = lines[1].len() / 2;
    lines[1].truncate(half);
    std::fs::write(&path, lines.join("\n")).unwrap();
    let out = run(&cfg, &["report"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn seed_flag_changes_panel() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n_companies = 10\nn_quarters = 26", 24);
    assert_ok(&run(&cfg, &["synth"]));
    let a = std::fs::read(tmp.path().join("data/panel.csv")).unwrap();
    assert_ok(&run(&cfg, &["--seed", "7", "synth"]));
    let b = std::fs::read(tmp.path().join("data/panel.csv")).unwrap();
    assert_ne!(a, b);
    assert_ok(&run(&cfg, &["synth"]));
    assert_eq!(std::fs::read(tmp.path().join("data/panel.csv")).unwrap(), a);
}

#[test]
fn unknown_config_key_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n_companies = 10\nnoise = 1.0", 24);
    let out = run(&cfg, &["synth"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("noise"));
}
