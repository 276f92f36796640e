use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sweep_core::harness::{preset, ExperimentConfig, Summary, CURVES_HEADER};

fn sweep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sweep")).args(args).env("RUST_LOG", "error").output().expect("sweep runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn small_config(dir: &Path) -> String {
    let mut cfg = preset("fig1a").unwrap();
    cfg.env_samples = 2;
    cfg.runs_per_env = 2;
    cfg.steps_per_run = 600;
    let path = dir.join("small.toml");
    fs::write(&path, cfg.to_toml()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn dry_run_prints_a_loadable_config() {
    let out = sweep(&["run", "--preset", "fig3b", "--dry-run", "--seed", "9"]);
    assert!(out.status.success());
    let cfg = ExperimentConfig::from_toml(&stdout(&out)).unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.window, 10_000);
}

#[test]
fn run_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let out_dir = tmp.path().join("out");
    let out = sweep(&["run", "--config", &config, "--out", out_dir.to_str().unwrap(), "--workers", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("ps_reset"));
    let curves = fs::read_to_string(out_dir.join("curves.csv")).unwrap();
    assert!(curves.starts_with(CURVES_HEADER));
    assert_eq!(curves.lines().count(), 2 + 2 * 9 * 2 * 3);
    let summary = Summary::from_csv(&fs::read_to_string(out_dir.join("summary.csv")).unwrap()).unwrap();
    assert_eq!(summary.curves.len(), 9);
    assert_eq!(summary.curves[0].points.len(), 3);
    assert!(fs::read_to_string(out_dir.join("plot.gp")).unwrap().contains("summary.csv"));
    let saved = ExperimentConfig::from_toml(&fs::read_to_string(out_dir.join("config.toml")).unwrap()).unwrap();
    assert_eq!(saved.env_samples, 2);
}

#[test]
fn verify_suites_pass_and_report() {
    let out = sweep(&["verify", "--suite", "equivalence", "--trials", "3", "--episodes", "5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("exact_equal: true"));
    assert!(text.contains("overall: PASS"));

    let out = sweep(&["verify", "--suite", "ec-bound", "--trials", "5"]);
    assert!(out.status.success(), "{}", stdout(&out));
}

#[test]
fn oracle_and_generate_agree_on_a_spec() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("maze.toml");
    fs::write(&spec, "family = \"maze\"\nwidth = 2\nheight = 1\nwall_density = 0.0\ngoal = [1, 0]\n").unwrap();
    let json = tmp.path().join("maze.json");
    let out = sweep(&["generate", "--spec", spec.to_str().unwrap(), "--out", json.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // Start cell 0, goal cell 1: one step right earns 1, V*(start) = 1.
    let out = sweep(&["oracle", "--env", json.to_str().unwrap(), "--gamma", "0.99"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("states: 2"));
    assert!(text.contains("initial_value: 1\n"), "{text}");

    let out = sweep(&["generate", "--spec", spec.to_str().unwrap(), "--render"]);
    assert!(out.status.success());
    assert!(!stdout(&out).trim().is_empty());
}

#[test]
fn plot_reads_a_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("summary.csv");
    fs::write(&csv, Summary::default().to_csv()).unwrap();
    let out = sweep(&["plot", "--summary", csv.to_str().unwrap(), "--title", "empty"]);
    assert!(out.status.success());
    let script = fs::read_to_string(tmp.path().join("plot.gp")).unwrap();
    assert!(script.contains("empty"));
}

#[test]
fn bad_input_exits_with_code_two() {
    let out = sweep(&["run", "--preset", "fig9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig9"));

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "name = \"x\"\n").unwrap();
    let out = sweep(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
