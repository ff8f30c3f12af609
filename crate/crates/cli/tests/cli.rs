use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn motionread(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_motionread")).current_dir(cwd).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_vec_pretty(cfg).unwrap()).unwrap();
    path
}

fn small_nmr(out: &Path) -> Value {
    json!({
        "experiment": "nmr-scan",
        "seed": 7,
        "output_dir": out,
        "overrides": { "n_points": 11, "cycles_per_point": 40 }
    })
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn unknown_key_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "experiment": "beta-table",
        "seed": 1,
        "output_dir": dir.path().join("out"),
        "overrides": { "beta_stretched": 2.15, "typo": 1 }
    });
    let path = write_config(dir.path(), "run.json", &cfg);
    let out = motionread(dir.path(), &["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("typo"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_seed_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({ "experiment": "beta-table", "output_dir": dir.path().join("out") });
    let path = write_config(dir.path(), "run.json", &cfg);
    let out = motionread(dir.path(), &["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invariant_violation_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "experiment": "clock-detect",
        "seed": 1,
        "output_dir": dir.path().join("out"),
        "overrides": { "classifier": { "thresholds": [0.1, 0.05] } }
    });
    let path = write_config(dir.path(), "run.json", &cfg);
    let out = motionread(dir.path(), &["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn validate_reports_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let clock = json!({
        "experiment": "clock-detect",
        "seed": 1,
        "output_dir": "unused",
        "overrides": { "classifier": { "thresholds": [0.1, 0.05] }, "histogram_bin_width": -1.0 }
    });
    let path = write_config(dir.path(), "clock.json", &clock);
    let out = motionread(dir.path(), &["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    let keys: Vec<&str> = report.iter().map(|v| v["key"].as_str().unwrap()).collect();
    assert!(keys.contains(&"classifier.thresholds"), "{keys:?}");
    assert!(keys.contains(&"histogram_bin_width"), "{keys:?}");

    let nmr = json!({
        "experiment": "nmr-scan",
        "seed": 1,
        "output_dir": "unused",
        "overrides": { "nmr": { "dt": 1e-3 } }
    });
    let path = write_config(dir.path(), "nmr.json", &nmr);
    let out = motionread(dir.path(), &["validate", path.to_str().unwrap()]);
    let report: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report.iter().any(|v| v["key"] == "nmr.dt"), "{report:?}");

    let defaults = motionread(dir.path(), &["defaults", "nmr-scan"]);
    let path = dir.path().join("defaults.json");
    fs::write(&path, &defaults.stdout).unwrap();
    let out = motionread(dir.path(), &["validate", path.to_str().unwrap()]);
    let report: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report.is_empty(), "{report:?}");
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut hashes = Vec::new();
    for (i, workers) in ["1", "4"].iter().enumerate() {
        let out_dir = dir.path().join(format!("run{i}"));
        let path = write_config(dir.path(), &format!("run{i}.json"), &small_nmr(&out_dir));
        let out = motionread(dir.path(), &["run", path.to_str().unwrap(), "--workers", workers]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let manifest: Value = serde_json::from_slice(&fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
        for f in manifest["files"].as_array().unwrap() {
            let name = f["name"].as_str().unwrap();
            let bytes = fs::read(out_dir.join(name)).unwrap();
            assert_eq!(bytes.len() as u64, f["bytes"].as_u64().unwrap());
        }
        hashes.push(manifest["files"].clone());
        let csv_a = fs::read(out_dir.join("nmr_scan.csv")).unwrap();
        if i == 1 {
            let csv_b = fs::read(dir.path().join("run0").join("nmr_scan.csv")).unwrap();
            assert_eq!(csv_a, csv_b);
        }
    }
    assert_eq!(hashes[0], hashes[1]);

    let other = dir.path().join("other");
    let path = write_config(dir.path(), "other.json", &small_nmr(&other));
    let out = motionread(dir.path(), &["run", path.to_str().unwrap(), "--seed", "8"]);
    assert!(out.status.success());
    assert_ne!(fs::read(other.join("nmr_scan.csv")).unwrap(), fs::read(dir.path().join("run0/nmr_scan.csv")).unwrap());
}

#[test]
fn beta_table_lists_six_sublevels() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("beta");
    let cfg = json!({ "experiment": "beta-table", "seed": 3, "output_dir": out_dir });
    let path = write_config(dir.path(), "run.json", &cfg);
    let out = motionread(dir.path(), &["run", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&out_dir.join("beta_table.csv"));
    assert_eq!(
        header,
        ["m", "c_m", "c_m_sq", "delta_over_2pi_hz", "beta_forward", "lamb_dicke_violated", "beta_calibrated"]
    );
    assert_eq!(rows.len(), 6);
    let stretched = rows.iter().find(|r| r[0] == "2.5").expect("stretched row");
    let beta: f64 = stretched[6].parse().unwrap();
    assert!((beta - 2.15).abs() < 1e-12);
    let c_sq: f64 = stretched[2].parse().unwrap();
    assert!((c_sq - 1.0).abs() < 1e-12);
}

#[test]
fn nmr_scan_writes_two_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("nmr");
    let path = write_config(dir.path(), "run.json", &small_nmr(&out_dir));
    let out = motionread(dir.path(), &["run", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&out_dir.join("nmr_scan.csv"));
    assert_eq!(header, ["curve", "t_s", "expected_signal", "mc_signal", "mc_err"]);
    assert_eq!(rows.len(), 22);
    let mut curves: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    curves.dedup();
    assert_eq!(curves.len(), 2);
    let fit: Value = serde_json::from_slice(&fs::read(out_dir.join("nmr_fit.json")).unwrap()).unwrap();
    assert!(fit.is_object());
}

#[test]
fn nothing_is_written_outside_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("nested").join("out");
    let cfg = json!({
        "experiment": "zeeman-jumps",
        "seed": 5,
        "output_dir": out_dir,
        "overrides": { "trajectory": { "total_time": 20.0 } }
    });
    let path = write_config(dir.path(), "run.json", &cfg);
    let out = motionread(dir.path(), &["run", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let mut top: Vec<String> =
        fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    top.sort();
    assert_eq!(top, ["nested", "run.json"]);
    let nested: Vec<_> = fs::read_dir(dir.path().join("nested")).unwrap().collect();
    assert_eq!(nested.len(), 1);

    let manifest: Value = serde_json::from_slice(&fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    let mut listed: Vec<String> =
        manifest["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap().to_string()).collect();
    listed.push("manifest.json".into());
    listed.sort();
    let mut present: Vec<String> =
        fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    present.sort();
    assert_eq!(listed, present);
}
