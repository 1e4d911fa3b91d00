//! End-to-end checks of the command-line interface: subcommands, output
//! shapes, and the exit-code contract (0 success, 2 config error,
//! 3 infeasible, 4 budget exceeded).

use std::path::PathBuf;
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_hetnet-ee")
}

fn default_config() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.json").to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(binary()).args(args).output().unwrap()
}

fn temp_file(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hetnet_ee_cli_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn shipped_config_matches_library_defaults() {
    let cfg = hetnet_ee::ScenarioConfig::from_json_file(default_config()).unwrap();
    assert_eq!(cfg, hetnet_ee::ScenarioConfig::default());
}

#[test]
fn solve_emits_result_json() {
    let out = run(&["solve", "--config", &default_config(), "--seed", "3"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["status"], "converged");
    assert!(value["total_ee"].as_f64().unwrap() > 0.0);
    assert_eq!(value["per_user_rates"].as_array().unwrap().len(), 5);
    let beta = value["allocation"]["beta"].as_f64().unwrap();
    assert!((0.0..1.0).contains(&beta));
}

#[test]
fn solve_supports_every_algorithm_flag() {
    for algo in ["iterative", "fixed-beta", "equal-power", "random-beta"] {
        let out = run(&[
            "solve",
            "--config",
            &default_config(),
            "--seed",
            "3",
            "--algo",
            algo,
        ]);
        assert!(out.status.success(), "algo {algo}");
    }
}

#[test]
fn missing_config_is_a_config_error() {
    let out = run(&["solve", "--config", "/nonexistent/nowhere.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_config_is_a_config_error() {
    let path = temp_file("broken.json");
    std::fs::write(&path, "{ not json").unwrap();
    let out = run(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_flag_is_a_usage_error() {
    let out = run(&["solve", "--config", &default_config(), "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_instance_exits_3() {
    // A QoS floor far above any supportable rate.
    let mut cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(default_config()).unwrap()).unwrap();
    cfg["qos_rate"] = serde_json::json!(50.0);
    let path = temp_file("infeasible.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = run(&["solve", "--config", path.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["status"], "infeasible");
}

#[test]
fn oracle_budget_exceeded_exits_4() {
    // The default scenario has 25 users; the grid is astronomically large.
    let out = run(&["oracle", "--config", &default_config(), "--seed", "1"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn oracle_solves_small_instances() {
    let mut cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(default_config()).unwrap()).unwrap();
    cfg["num_small_cells"] = serde_json::json!(1);
    cfg["users_per_cell"] = serde_json::json!(2);
    let path = temp_file("small.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = run(&["oracle", "--config", path.to_str().unwrap(), "--seed", "5"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(value["total_ee"].as_f64().unwrap() > 0.0);
}

#[test]
fn trace_emits_iteration_series() {
    let out = run(&["trace", "--config", &default_config(), "--seed", "7"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iteration,total_ee"));
    let first = lines.next().unwrap();
    assert!(first.starts_with("1,"), "unexpected row {first}");
}

#[test]
fn sweep_writes_csv_rows() {
    let out_path = temp_file("sweep.csv");
    let out = run(&[
        "sweep",
        "--config",
        &default_config(),
        "--variable",
        "users-per-cell",
        "--values",
        "2,3",
        "--algo",
        "iterative,fixed-beta",
        "--trials",
        "3",
        "--seed",
        "11",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(lines.len(), 1 + 4, "2 sweep values x 2 algorithms + header");
    assert!(lines[1].starts_with("users_per_cell,2.000000000e0,iterative,"));
}

#[test]
fn simulate_json_round_trips() {
    let spec = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../configs/sweep_users.json"
    );
    let out = run(&[
        "simulate", "--config", spec, "--trials", "2", "--format", "json",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 9 * 2, "9 sweep values x 2 algorithms");
    assert_eq!(rows[0]["sweep_variable"], "users_per_cell");
    assert!(rows[0]["trials_used"].as_u64().unwrap() <= 2);
}
