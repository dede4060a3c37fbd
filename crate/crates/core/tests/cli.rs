use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn wpcn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wpcn"))
        .args(args)
        .env_remove("WPCN_JOBS")
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, doc: &Value) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, doc.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn single_device(dir: &TempDir) -> String {
    write(
        dir,
        "one.json",
        &json!({
            "params": {"pb_power_dbm": 36.0},
            "devices": [{"eta": 0.9, "circuit_power_watts": 0.0, "dl_gain": 2e-4, "ul_gain": 3e-8}]
        }),
    )
}

#[test]
fn verify_default_suite_passes() {
    let out = wpcn(&["verify", "--trials", "100", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], json!(true));
}

#[test]
fn solve_single_device_prints_identical_objectives() {
    let dir = TempDir::new().unwrap();
    let cfg = single_device(&dir);
    let objective = |scheme: &str| {
        let out = wpcn(&["solve", "--config", &cfg, "--scheme", scheme]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(doc["scheme"], json!(scheme));
        doc["objective_bits_per_hz"].as_f64().unwrap()
    };
    assert_eq!(objective("tdma_opt"), objective("noma_opt"));
}

#[test]
fn solve_writes_report_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "seeded.json", &json!({"seed": 7, "params": {"num_devices": 4}}));
    let target = dir.path().join("report.json");
    let out = wpcn(&["solve", "--config", &cfg, "--scheme", "noma_fixed", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(doc["tau0_seconds"].as_f64().unwrap(), 0.05);
    assert_eq!(doc["allocation"]["powers"].as_array().unwrap().len(), 4);
}

#[test]
fn unknown_scheme_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = single_device(&dir);
    let out = wpcn(&["solve", "--config", &cfg, "--scheme", "fdma"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`scheme`"), "{}", stderr(&out));
}

#[test]
fn bad_config_field_is_named() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "bad.json",
        &json!({"devices": [{"eta": 0.9, "circuit_power_mw": -1.0, "dl_gain": 1e-4, "ul_gain": 1e-8}]}),
    );
    let out = wpcn(&["solve", "--config", &cfg, "--scheme", "tdma_opt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("circuit_power_watts"), "{}", stderr(&out));

    let missing = dir.path().join("nope.json");
    let out = wpcn(&["solve", "--config", missing.to_str().unwrap(), "--scheme", "tdma_opt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nope.json"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(wpcn(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(wpcn(&["verify", "--trials", "0"]).status.code(), Some(2));
}

#[test]
fn sweep_writes_csv_and_metadata() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "spec.json",
        &json!({
            "axis": "circuit_power_mw", "axis_values": [0.0, 0.1],
            "k_values": [2], "num_realizations": 3, "base_seed": 4,
            "schemes": ["tdma_opt", "noma_opt"]
        }),
    );
    let csv = dir.path().join("out.csv");
    let out = wpcn(&["sweep", "--spec", &spec, "--out", csv.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = wpcn::bench::parse_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(Path::new(&format!("{}.meta.json", csv.display())).exists());

    let out = wpcn(&["sweep", "--spec", &spec, "--out", csv.to_str().unwrap(), "--jobs", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("jobs"));
}

#[test]
fn topology_is_seeded() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "p.json", &json!({"num_devices": 3}));
    let a = wpcn(&["topology", "--config", &cfg, "--seed", "11"]);
    let b = wpcn(&["topology", "--config", &cfg, "--seed", "11"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let doc: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["seed"], json!(11));
    assert_eq!(doc["distances_m"].as_array().unwrap().len(), 3);
}
