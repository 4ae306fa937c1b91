use std::path::Path;
use std::process::{Command, Output};

use qjump_cli::output::sha256_hex;

fn qjump(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qjump")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&qjump(d, &["curve", "--scheme", "said", "--eta-grid", "0.5,1.2"])), 2);
    assert_eq!(code(&qjump(d, &["curve", "--scheme", "said", "--eta-grid", "0"])), 2);
    assert_eq!(code(&qjump(d, &["curve"])), 2);
    assert_eq!(code(&qjump(d, &["curve", "--scheme", "sad"])), 2);
    assert_eq!(code(&qjump(d, &["critical", "--pair", "said_y", "--tol", "0.001"])), 2);
    std::fs::write(d.join("bad.json"), r#"{"omgea": 3}"#).unwrap();
    assert_eq!(code(&qjump(d, &["curve", "--scheme", "said", "--config", "bad.json"])), 2);
    assert!(!d.join("curve.csv").exists());
}

#[test]
fn curve_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = qjump(d, &["curve", "--scheme", "said", "--eta-grid", "0.25,0.5,0.75,1", "--n-traj", "16", "--out", "c.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(d.join("c.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eta,value,mc_error,method"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 8);
    let oracle: Vec<f64> = rows.iter().filter(|r| r[3] == "oracle").map(|r| r[1].parse().unwrap()).collect();
    assert!(oracle.windows(2).all(|w| w[1] > w[0]));
    assert!((oracle[3] - 1.0).abs() < 1e-9);
    assert!(rows.iter().all(|r| r[1].split('e').next().unwrap().replace(['.', '-'], "").len() == 12));

    let m = json(&d.join("c.csv.manifest.json"));
    assert_eq!(m["command"], "curve");
    assert_eq!(m["seed"], 0);
    assert_eq!(m["config"]["n_traj"], 16);
    assert_eq!(m["config"]["eta_grid"][0], 0.25);
    assert_eq!(m["outputs"][0]["sha256"], sha256_hex(text.as_bytes()));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("run.json"), r#"{"scheme": "y_secular", "n_traj": 4, "seed": 11, "eta_grid": [0.5]}"#).unwrap();
    let o = qjump(d, &["curve", "--config", "run.json", "--seed", "12", "--out", "y.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&d.join("y.csv.manifest.json"));
    assert_eq!(m["config"]["scheme"], "y_secular");
    assert_eq!(m["config"]["n_traj"], 4);
    assert_eq!(m["seed"], 12);
}

#[test]
fn surface_marks_violations() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["surface", "--pair", "said_y", "--eta-grid", "0.3,1", "--n-traj", "12", "--out", "s.csv"];
    let o = qjump(d, &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.join("s.csv")).unwrap();
    assert!(csv.starts_with("eta_A,eta_B,S,mc_error\n"));
    assert_eq!(csv.lines().count(), 5);
    let s = json(&d.join("s.csv.summary.json"));
    let cells = s["cells"].as_array().unwrap();
    let low = &cells[0];
    assert_eq!((low["eta_a"].as_f64(), low["eta_b"].as_f64()), (Some(0.3), Some(0.3)));
    assert_eq!(low["violation"], false);
    let top = &cells[3];
    assert_eq!(top["violation"], true);
    assert!((top["s"].as_f64().unwrap() - 2.0).abs() < 3.0 * top["mc_error"].as_f64().unwrap() + 5e-3);
    let m = json(&d.join("s.csv.manifest.json"));
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn starved_critical_search_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["critical", "--pair", "said_y", "--n-traj", "2", "--budget", "2", "--tol", "0.01", "--out", "c.json"];
    let o = qjump(d, &args);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&d.join("c.json"));
    assert!(r["eta_critical"].is_null());
    assert_eq!(r["reason"], "inconclusive");
    for key in ["pair", "omega", "tol", "n_traj_used", "seed"] {
        assert!(!r[key].is_null(), "{key}");
    }
}

#[test]
fn validate_fails_with_an_oversized_step() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let small = r#"{"validate": {"me_trajectories": 50, "fuzz_samples": 2000, "confinement_steps": 10000,
        "noise_draws": 20000, "null_trajectories": 8}}"#;
    std::fs::write(d.join("small.json"), small).unwrap();
    let o = qjump(d, &["validate", "--config", "small.json", "--dt", "0.01", "--out", "v.json"]);
    assert_eq!(code(&o), 1);
    let r = json(&d.join("v.json"));
    assert_eq!(r["all_pass"], false);
    let failed: Vec<&str> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"dt_refinement") && failed.contains(&"dt_resolution"), "{failed:?}");
}
