use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn isospec(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isospec"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn minimal_family_writes_one_file() {
    let tmp = tempfile::tempdir().unwrap();
    let o = isospec(tmp.path(), &["--t-values", "0", "family", "gen"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files: Vec<_> = std::fs::read_dir(tmp.path().join("family")).unwrap().collect();
    assert_eq!(files.len(), 1);
    let r = report(&tmp.path().join("family_gen.json"));
    assert_eq!(r["results"]["passed"], true);
    assert_eq!(r["command"], "family gen");
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    assert!(r.get("wall_time_s").is_none());
}

#[test]
fn three_member_family_round_trips_through_check() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(isospec(tmp.path(), &["family", "gen"]).status.success());
    let fam = tmp.path().join("family");
    let o = isospec(tmp.path(), &["family", "check", "--family", fam.to_str().unwrap()]);
    assert!(o.status.success());
    let r = report(&tmp.path().join("family_check.json"));
    assert_eq!(r["results"]["pairs"].as_array().unwrap().len(), 3);
    assert!(r["results"]["min_invariant_gap"].as_f64().unwrap() > 1e-6);
}

#[test]
fn small_m_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = isospec(tmp.path(), &["--m", "2", "family", "gen"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("m >= 3"));
}

#[test]
fn corrupted_family_fails_verification() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(isospec(tmp.path(), &["family", "gen"]).status.success());
    let file = tmp.path().join("family/j_002.json");
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    for row in doc["J2"].as_array_mut().unwrap() {
        for entry in row.as_array_mut().unwrap() {
            for x in entry.as_array_mut().unwrap() {
                *x = Value::from(x.as_f64().unwrap() * 2.0);
            }
        }
    }
    std::fs::write(&file, serde_json::to_string(&doc).unwrap()).unwrap();
    let fam = tmp.path().join("family");
    let o = isospec(tmp.path(), &["verify", "--family", fam.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let r = report(&tmp.path().join("verify.json"));
    let failures = r["results"]["failures"].as_array().unwrap();
    assert!(failures.iter().any(|f| f.as_str().unwrap().contains("intertwining")));
}

#[test]
fn valid_family_verifies() {
    let tmp = tempfile::tempdir().unwrap();
    let o = isospec(tmp.path(), &["--points", "50", "verify"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&tmp.path().join("verify.json"));
    assert!(r["results"]["max_intertwining_residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn stiefel_rank_three_is_an_orbifold_without_nonisometry() {
    let tmp = tempfile::tempdir().unwrap();
    let o = isospec(tmp.path(), &["--manifold", "stiefel", "--r", "3", "--points", "30", "verify"]);
    assert!(o.status.success());
    let r = report(&tmp.path().join("verify.json"));
    assert_eq!(r["results"]["strata"]["is_orbifold"], true);
    assert!(r["results"]["nonisometry"].as_str().unwrap().starts_with("refused"));
    let o = isospec(tmp.path(), &["--manifold", "stiefel", "--r", "3", "nonisometry"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_stiefel_rank_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = isospec(tmp.path(), &["--manifold", "stiefel", "--r", "6", "strata"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn k_not_below_n_is_a_parameter_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = isospec(tmp.path(), &["--n", "40", "--k", "40", "--seeds", "0", "spectrum", "calibrate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn calibration_writes_tables_and_plot() {
    let tmp = tempfile::tempdir().unwrap();
    let o = isospec(tmp.path(), &["--n", "800", "--seeds", "0,1", "--timing", "spectrum", "calibrate"]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(tmp.path().join("calibrate_summary.csv")).unwrap();
    assert!(csv.starts_with("index,analytic,median_estimate"));
    assert_eq!(csv.lines().count(), 11);
    let svg = std::fs::read_to_string(tmp.path().join("calibrate.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    let r = report(&tmp.path().join("spectrum_calibrate.json"));
    assert!(r["wall_time_s"].as_f64().is_some());
    let med = r["results"]["median_estimate"].as_array().unwrap();
    assert!((med[1].as_f64().unwrap() - 2.0).abs() < 0.5);
}

#[test]
fn config_file_and_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    std::fs::write(&cfg, r#"{"m": 4, "t_values": [0, 0.05]}"#).unwrap();
    let o = isospec(tmp.path(), &["--config", cfg.to_str().unwrap(), "--seed", "3", "family", "gen"]);
    assert!(o.status.success());
    let r = report(&tmp.path().join("family_gen.json"));
    assert_eq!(r["config"]["m"], 4);
    assert_eq!(r["config"]["seed"], 3);
    std::fs::write(&cfg, r#"{"mm": 4}"#).unwrap();
    let o = isospec(tmp.path(), &["--config", cfg.to_str().unwrap(), "strata"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_family_directory_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    let o = isospec(tmp.path(), &["family", "check", "--family", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_isospec"))
        .env("ISOSPEC_OUT", tmp.path())
        .arg("strata")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(tmp.path().join("strata.json").exists());
}
