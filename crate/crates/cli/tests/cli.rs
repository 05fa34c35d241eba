//! End-to-end checks of the `offload-commons` binary: config parsing and
//! validation, exit codes, and artifact layout.

use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_offload-commons");

fn baseline_config() -> &'static str {
    include_str!("../../../configs/metro_baseline.json")
}

fn run(sub: &str, config: &str, out: &Path) -> std::process::Output {
    let dir = out.parent().unwrap();
    let cfg_path = dir.join("config.json");
    std::fs::write(&cfg_path, config).unwrap();
    Command::new(BIN)
        .args([sub, "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn config_roundtrips_through_serialization() {
    use offload_cli_tests_support::*;
    let parsed = parse(baseline_config());
    let text = serde_json::to_string_pretty(&parsed).unwrap();
    let reparsed = parse(&text);
    assert_eq!(parsed, reparsed);
}

// The config module is private to the binary; revalidate through serde on
// the same schema the binary writes back out as scenario.json.
mod offload_cli_tests_support {
    pub fn parse(text: &str) -> serde_json::Value {
        serde_json::from_str(text).unwrap()
    }
}

#[test]
fn every_subcommand_writes_its_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    for sub in ["equilibrium", "simulate", "classify", "dominance"] {
        let out = tmp.path().join(sub);
        let r = run(sub, baseline_config(), &out);
        assert!(r.status.success(), "{sub}: {}", String::from_utf8_lossy(&r.stderr));
        for f in ["scenario.json", "report.json", "manifest.json"] {
            assert!(out.join(f).exists(), "{sub} missing {f}");
        }
        let has_trajectory = out.join("trajectory.csv").exists();
        assert_eq!(has_trajectory, matches!(sub, "simulate" | "classify"), "{sub}");
    }
}

#[test]
fn sweep_requires_a_sweep_section_and_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    // no sweep section: a runtime model error, not a config error
    let r = run("sweep", baseline_config(), &out);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("sweep"));

    let mut cfg: serde_json::Value = serde_json::from_str(baseline_config()).unwrap();
    cfg["sweep"] = serde_json::json!({
        "parameters": [
            {"param": "wifi_capacity", "from": 80.0, "to": 120.0, "steps": 3}
        ]
    });
    let r = run("sweep", &cfg.to_string(), &out);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4); // header + 3 points
    assert!(lines[0].starts_with("index,param_1,value_1"));
}

#[test]
fn class_ordering_violation_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(baseline_config()).unwrap();
    cfg["classes"]["premium"]["min_quality"] = serde_json::json!(0.1);
    let r = run("classify", &cfg.to_string(), &tmp.path().join("out"));
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("class ordering violated"), "stderr: {err}");
}

#[test]
fn oversubscribed_shared_band_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(baseline_config()).unwrap();
    cfg["wifi_capacity"] = serde_json::json!(30.0);
    let r = run("classify", &cfg.to_string(), &tmp.path().join("out"));
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn cost_ordering_violation_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(baseline_config()).unwrap();
    cfg["providers"][1]["licensed"]["cost_per_unit"] = serde_json::json!(0.01);
    let r = run("classify", &cfg.to_string(), &tmp.path().join("out"));
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("cost-ordering violation"), "stderr: {err}");
}

#[test]
fn unknown_fields_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(baseline_config()).unwrap();
    cfg["not_a_field"] = serde_json::json!(1);
    let r = run("classify", &cfg.to_string(), &tmp.path().join("out"));
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let r = Command::new(BIN)
        .args(["classify", "--config", "/definitely/not/here.json", "--out"])
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn cli_overrides_reach_the_emitted_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg_path = tmp.path().join("config.json");
    std::fs::write(&cfg_path, baseline_config()).unwrap();
    let r = Command::new(BIN)
        .args(["simulate", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .args(["--grid", "2", "--rounds", "5", "--seed", "99"])
        .output()
        .unwrap();
    assert!(r.status.success());
    let scenario: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("scenario.json")).unwrap()).unwrap();
    assert_eq!(scenario["grid_steps"], 2);
    assert_eq!(scenario["rounds"], 5);
    assert_eq!(scenario["seed"], 99);
    // rounds override shortens the trajectory: header + rounds + 1 states
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn minimal_config_fills_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let minimal = serde_json::json!({
        "schema_version": 1,
        "loc": "minimal",
        "classes": {"bulk": {"min_quality": 0.2}, "premium": {"min_quality": 0.6}},
        "wifi_capacity": 100.0,
        "providers": [
            {
                "name": "a",
                "backhaul": {"capacity": 50.0, "cost_per_unit": 0.1},
                "tariffs": {"unlicensed_bulk": 1.0},
                "demand": {"bulk": 10.0}
            },
            {
                "name": "b",
                "backhaul": {"capacity": 50.0, "cost_per_unit": 0.1},
                "licensed": {"capacity": 80.0, "cost_per_unit": 0.5},
                "tariffs": {"unlicensed_bulk": 1.0, "licensed_bulk": 1.2},
                "demand": {"bulk": 20.0}
            }
        ]
    });
    let r = run("classify", &minimal.to_string(), &out);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let scenario: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("scenario.json")).unwrap()).unwrap();
    assert_eq!(scenario["grid_steps"], 4);
    assert_eq!(scenario["rounds"], 30);
    assert_eq!(scenario["policy"], "static");
    assert_eq!(scenario["migration"]["cap"], 0.2);
    assert_eq!(scenario["thresholds"]["relative_gap"], 0.25);
}

#[test]
fn model_error_is_structured_json_on_stderr() {
    // an admitted pool that overflows the shared band at runtime cannot be
    // caught structurally; force it through an infeasible sweep-free setup
    let tmp = tempfile::tempdir().unwrap();
    let r = run("sweep", baseline_config(), &tmp.path().join("out"));
    assert_eq!(r.status.code(), Some(3));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&r.stderr).trim()).unwrap();
    assert!(err["error"].is_string());
}
