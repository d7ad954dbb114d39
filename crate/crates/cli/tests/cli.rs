//! End-to-end CLI behavior: artifact contents, exit codes and the negative
//! paths (malformed config, exhausted budget, corrupted boundary file).

use std::path::{Path, PathBuf};
use std::process::Output;

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str], out: &Path) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_lmpseq"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn design_writes_headed_csv_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["design", "--config", &fixture("bernoulli_truncated.toml")], dir.path());
    assert!(out.status.success());
    let boundaries = read(dir.path(), "boundaries.csv");
    assert!(boundaries.starts_with("# lmpseq "), "{boundaries}");
    assert!(boundaries.contains("config="));
    assert!(boundaries.contains("seed=11"));
    assert!(boundaries.lines().any(|l| l.starts_with("stage,")));
    let values = read(dir.path(), "value_functions.csv");
    assert!(values.lines().count() > 10);
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["design", "--config", &fixture("bernoulli_truncated.toml"), "--seed", "99"],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(read(dir.path(), "boundaries.csv").contains("seed=99"));
}

#[test]
fn simulate_reports_both_provenances_on_discrete_truncated() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--config", &fixture("bernoulli_truncated.toml")], dir.path());
    assert!(out.status.success());
    let chars = read(dir.path(), "characteristics.csv");
    assert!(chars.contains("monte_carlo"), "{chars}");
    assert!(chars.contains("exact"), "{chars}");
    // 200 reps requested: the trace covers the null pass.
    let trace = read(dir.path(), "trace.csv");
    assert_eq!(trace.lines().filter(|l| !l.starts_with('#') && !l.starts_with("rep,")).count(), 200);
}

#[test]
fn single_rep_trace_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--config", &fixture("single_rep.toml")], dir.path());
    assert!(out.status.success());
    let trace = read(dir.path(), "trace.csv");
    let rows: Vec<&str> = trace
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("rep,"))
        .collect();
    assert_eq!(rows.len(), 1, "{trace}");
}

#[test]
fn degenerate_model_yields_empty_boundaries() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["design", "--config", &fixture("degenerate_design.toml")], dir.path());
    assert!(out.status.success());
    let boundaries = read(dir.path(), "boundaries.csv");
    assert!(boundaries.contains("EMPTY,EMPTY"), "{boundaries}");
}

#[test]
fn malformed_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["design", "--config", &fixture("malformed_cost.toml")], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("design.c"));
}

#[test]
fn missing_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["design", "--config", "/nonexistent.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn exhausted_budget_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--config", &fixture("tiny_budget.toml")], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_passes_and_cross_checks_own_boundaries() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture("bernoulli_truncated.toml");
    assert!(run(&["design", "--config", &config], dir.path()).status.success());
    let boundaries: PathBuf = dir.path().join("boundaries.csv");
    let out = run(
        &["verify", "--config", &config, "--boundaries", boundaries.to_str().unwrap()],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("pass: boundary_file_agreement"), "{stdout}");
    assert!(!stdout.contains("FAIL"), "{stdout}");
}

#[test]
fn verify_detects_corrupted_boundaries_and_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture("bernoulli_truncated.toml");
    assert!(run(&["design", "--config", &config], dir.path()).status.success());
    let path = dir.path().join("boundaries.csv");
    // Nudge the first numeric field of the first data row.
    let corrupted: String = std::fs::read_to_string(&path)
        .unwrap()
        .lines()
        .map(|l| {
            if l.starts_with('#') || l.starts_with("stage,") {
                l.to_string()
            } else {
                let mut fields: Vec<String> = l.split(',').map(str::to_string).collect();
                if let Ok(v) = fields[1].parse::<f64>() {
                    fields[1] = format!("{}", v + 0.001);
                }
                fields.join(",")
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(&path, corrupted).unwrap();
    let out = run(
        &["verify", "--config", &config, "--boundaries", path.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL: boundary_file_agreement"));
}

#[test]
fn oracle_certificate_matches_recursion() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["oracle", "--config", &fixture("bernoulli_truncated.toml")], dir.path());
    assert!(out.status.success());
    let cert = read(dir.path(), "certificate.csv");
    assert!(cert.contains("dp_min"), "{cert}");
    assert!(cert.contains("recursion_value"));
}

#[test]
fn export_dumps_value_grids() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["export", "--config", &fixture("bernoulli_truncated.toml")], dir.path());
    assert!(out.status.success());
    let values = read(dir.path(), "value_functions.csv");
    assert!(values.lines().any(|l| l.starts_with("stage,")));
}
