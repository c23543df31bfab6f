//! End-to-end CLI behavior: exit codes, determinism, file handling.

use std::path::Path;
use std::process::{Command, Output};

use ggpt::io::{EffectSpec, MeasurementFile};
use ggpt::measurement::Measurement;
use ggpt::models;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ggpt"))
}

fn write_measurement(meas: &Measurement, path: &Path) {
    let file = MeasurementFile {
        model: Some(meas.model().kind()),
        effects: meas
            .effects()
            .iter()
            .map(|f| EffectSpec::Coords { coords: f.coords().as_slice().to_vec() })
            .collect(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&file).unwrap()).unwrap();
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn classify_sic_reports_all_classes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sic.json");
    write_measurement(&models::qubit_sic(), &path);
    let out = bin().args(["classify", "--povm"]).arg(&path).output().unwrap();
    let v = stdout_json(&out);
    assert_eq!(v["ic"], true);
    assert_eq!(v["morphophoric"], true);
    assert_eq!(v["tight_ic"], true);
    assert_eq!(v["s_tight"], true);
    assert_eq!(v["chi_ray"], true);
}

#[test]
fn invalid_sum_exits_2_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"model": {"type": "classical", "n": 2}, "effects": [{"coords": [0.4, 0.0]}]}"#,
    )
    .unwrap();
    let out = bin().args(["classify", "--povm"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("do not sum to unit effect"), "stderr: {stderr}");
}

#[test]
fn missing_file_exits_1() {
    let out = bin().args(["classify", "--povm", "/nonexistent/povm.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn model_conflict_warns_and_file_wins() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fine.json");
    write_measurement(&models::fine_grained(3), &path);
    let out = bin()
        .args(["classify", "--model", "classical:4", "--povm"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn model_flag_supplies_missing_model() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nomodel.json");
    std::fs::write(
        &path,
        r#"{"effects": [{"coords": [0.5, 0.2]}, {"coords": [0.5, -0.2]}]}"#,
    )
    .unwrap();
    // Without a model: validation failure.
    let out = bin().args(["classify", "--povm"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    // With one: fine.
    let out = bin()
        .args(["classify", "--model", "classical:2", "--povm"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn scales_on_a_frame_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mercedes.json");
    let r3 = 3f64.sqrt() / 2.0;
    std::fs::write(
        &path,
        format!(r#"{{"dim": 2, "vectors": [[1.0, 0.0], [-0.5, {r3}], [-0.5, -{r3}]]}}"#),
    )
    .unwrap();
    let out = bin().args(["scales", "--frame"]).arg(&path).output().unwrap();
    let v = stdout_json(&out);
    assert_eq!(v["scalable"], true);
    assert!((v["frame_bound"].as_f64().unwrap() - 1.5).abs() < 1e-8);
}

#[test]
fn reconstruct_rejects_non_s_tight_measurements() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("clustered.json");
    write_measurement(&models::clustered_non_scalable(), &path);
    let out = bin()
        .args(["reconstruct", "--probs", "0.15,0.15,0.15,0.25,0.15,0.15", "--povm"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not s-tight"));
}

#[test]
fn predict_matches_born_rule_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let pi_path = dir.path().join("sic.json");
    let xi_path = dir.path().join("z.json");
    write_measurement(&models::qubit_sic(), &pi_path);
    write_measurement(&models::z_basis(), &xi_path);
    let r3 = 3f64.sqrt();
    let probs = format!(
        "{},{},{},{}",
        (1.0 + 1.0 / r3) / 4.0,
        (1.0 - 1.0 / r3) / 4.0,
        (1.0 - 1.0 / r3) / 4.0,
        (1.0 + 1.0 / r3) / 4.0
    );
    let out = bin()
        .args(["predict", "--probs", &probs, "--povm"])
        .arg(&pi_path)
        .arg("--xi")
        .arg(&xi_path)
        .output()
        .unwrap();
    let v = stdout_json(&out);
    let p = v["probabilities"].as_array().unwrap();
    assert!((p[0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(p[1].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn verify_passes_for_sic_and_fails_for_clustered() {
    let dir = tempfile::tempdir().unwrap();
    let pi_path = dir.path().join("sic.json");
    let xi_path = dir.path().join("xi.json");
    write_measurement(&models::qubit_sic(), &pi_path);
    write_measurement(&models::qubit_sic_reflected(), &xi_path);
    let out = bin()
        .args(["verify", "--samples", "50", "--seed", "7", "--povm"])
        .arg(&pi_path)
        .arg("--xi")
        .arg(&xi_path)
        .output()
        .unwrap();
    let v = stdout_json(&out);
    assert_eq!(v["pass"], true);

    let bad_path = dir.path().join("clustered.json");
    write_measurement(&models::clustered_non_scalable(), &bad_path);
    let out = bin()
        .args(["verify", "--samples", "50", "--seed", "7", "--povm"])
        .arg(&bad_path)
        .arg("--xi")
        .arg(&pi_path)
        .output()
        .unwrap();
    let v = stdout_json(&out);
    assert_eq!(v["pass"], false);
    assert!(v["max_residual"].as_f64().unwrap() > 1e-3);
}

#[test]
fn identical_inputs_and_seed_give_byte_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let pi_path = dir.path().join("sic.json");
    let xi_path = dir.path().join("z.json");
    write_measurement(&models::qubit_sic(), &pi_path);
    write_measurement(&models::z_basis(), &xi_path);
    let run = || {
        bin()
            .args(["verify", "--samples", "64", "--seed", "123", "--povm"])
            .arg(&pi_path)
            .arg("--xi")
            .arg(&xi_path)
            .output()
            .unwrap()
    };
    let a = run();
    let b = run();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let sweep = || bin().args(["sweep", "--grid", "4x4x4"]).output().unwrap();
    assert_eq!(sweep().stdout, sweep().stdout);
}

#[test]
fn sweep_writes_csv_with_all_s_tight() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("region.csv");
    let out = bin()
        .args(["sweep", "--grid", "5x5x5", "--out"])
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "a,b,c,ic,morphophoric,tight_ic,s_tight,chi_ray,alpha_s");
    let mut rows = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[6], "1", "every family point is s-tight");
        rows += 1;
    }
    assert_eq!(rows, 125);
}

#[test]
fn format_mismatch_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sic.json");
    write_measurement(&models::qubit_sic(), &path);
    let out =
        bin().args(["classify", "--format", "csv", "--povm"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
