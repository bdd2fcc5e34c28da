//! End-to-end tests of the `contdiag` binary: exit-code contract, output
//! schema, determinism, and environment-variable precedence.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_contdiag"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

#[test]
fn diagonalize_constant_field_succeeds() {
    let out = run(&[
        "diagonalize", "--f", "1", "--g", "2", "--h-re", "0", "--h-im", "0", "--a", "0", "--b",
        "1", "--n", "101", "--mode", "distinct",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("status: ok"));
}

#[test]
fn config_errors_exit_2() {
    // Unparsable expression.
    let out = run(&[
        "diagonalize", "--f", "1 +", "--g", "2", "--a", "0", "--b", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // No field at all.
    let out = run(&["diagonalize"]);
    assert_eq!(out.status.code(), Some(2));
    // Unknown gallery id.
    let out = run(&["diagonalize", "--gallery", "no-such-field"]);
    assert_eq!(out.status.code(), Some(2));
    // Conflicting sources.
    let out = run(&[
        "diagonalize", "--gallery", "pauli-x", "--f", "1", "--g", "2",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn error_exit_codes_match_contract() {
    for (id, want) in [
        ("distinct-on-crossing", 3),
        ("paper-ex-smooth", 4),
        ("paper-ex-2.1", 5),
        ("identity-degenerate", 6),
    ] {
        let out = run(&["diagonalize", "--gallery", id, "--n", "1001"]);
        assert_eq!(out.status.code(), Some(want), "gallery {}: {}", id, stdout(&out));
    }
}

#[test]
fn csv_schema_and_float_format() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = run(&[
        "diagonalize", "--gallery", "pauli-x", "--n", "11", "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(out_dir.join("solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,ReU11,ImU11,ReU12,ImU12,ReU21,ImU21,ReU22,ImU22,d1,d2,offdiag_resid,unitarity_defect"
    );
    let first = lines.next().unwrap();
    let cells: Vec<&str> = first.split(',').collect();
    assert_eq!(cells.len(), 13);
    // 17 significant digits, round-trip exact.
    let u11: f64 = cells[1].parse().unwrap();
    assert!((u11 - std::f64::consts::FRAC_1_SQRT_2).abs() <= f64::EPSILON);
    assert!(cells[1].contains('e'));
    let d1: f64 = cells[9].parse().unwrap();
    assert!((d1 - 1.0).abs() <= 4.0 * f64::EPSILON);
    assert_eq!(csv.lines().count(), 12);
}

#[test]
fn outputs_are_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (d1, d2) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&d1, &d2] {
        let out = run(&[
            "diagonalize", "--gallery", "trig-crossing", "--n", "501", "--seed", "7", "--out",
            d.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let csv1 = std::fs::read(d1.join("solution.csv")).unwrap();
    let csv2 = std::fs::read(d2.join("solution.csv")).unwrap();
    assert_eq!(csv1, csv2, "solution.csv differs between identical runs");
    let r1 = std::fs::read(d1.join("report.json")).unwrap();
    let r2 = std::fs::read(d2.join("report.json")).unwrap();
    assert_eq!(r1, r2, "report.json differs between identical runs");
}

#[test]
fn json_report_has_expected_fields() {
    let out = run(&["diagonalize", "--gallery", "linear-offdiag", "--n", "501", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["status"], "ok");
    assert_eq!(v["exit_code"], 0);
    assert!(v["residuals"]["max_unitarity_defect"].as_f64().unwrap() <= 1e-10);
    assert!(v["coalescence"].as_array().unwrap().len() == 1);
    assert_eq!(v["sign_convention"]["mu_initial_sign"], -1);
    assert!(v.get("timing_ms").is_none(), "timings leak by default");
    // Error reports carry the code and message.
    let out = run(&["diagonalize", "--gallery", "paper-ex-2.1", "--n", "501", "--json"]);
    assert_eq!(out.status.code(), Some(5));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["status"], "derivative_discontinuous");
    assert_eq!(v["exit_code"], 5);
    assert!(v["message"].as_str().unwrap().contains("jumps"));
}

#[test]
fn check_mode_reports_persistence() {
    let out = run(&["check", "--gallery", "paper-ex-2.1", "--n", "1001", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let ob = &v["obstruction"];
    assert_eq!(ob["persistent_jump"], true);
    assert!(ob["base_max_jump"].as_f64().unwrap() > 0.5);
    assert!(ob["refined_max_jump"].as_f64().unwrap() > 0.5);
    let out = run(&["check", "--gallery", "smooth-generic", "--n", "1001", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["obstruction"]["persistent_jump"], false);
}

#[test]
fn oracle_compare_reports_alignment() {
    let out = run(&["oracle-compare", "--gallery", "smooth-generic", "--n", "2001", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let align = v["oracle"]["min_alignment"].as_f64().unwrap();
    assert!(align >= 1.0 - 1e-8, "alignment {}", align);
}

#[test]
fn gallery_list_and_run_all() {
    let out = run(&["gallery", "list"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).lines().count() >= 9);
    let out = run(&["gallery", "run", "paper-ex-2.1", "--n", "801"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("PASS"));
    let out = run(&["gallery", "run-all", "--n", "801"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("16/16"));
}

#[test]
fn env_overrides_with_cli_precedence() {
    // Env supplies the grid size...
    let out = bin()
        .args(["diagonalize", "--gallery", "pauli-x", "--json"])
        .env("CONTDIAG_N", "11")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["config"]["n"], 11);
    // ...but an explicit flag wins.
    let out = bin()
        .args(["diagonalize", "--gallery", "pauli-x", "--n", "21", "--json"])
        .env("CONTDIAG_N", "11")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["config"]["n"], 21);
}

#[test]
fn sample_csv_input_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.csv");
    // diag(1, 2) sampled on 21 nodes.
    let mut body = String::from("t,f,g,h_re,h_im\n");
    for i in 0..21 {
        let t = i as f64 / 20.0;
        body.push_str(&format!("{},1,2,0,0\n", t));
    }
    std::fs::write(&path, body).unwrap();
    let out = run(&[
        "diagonalize", "--input", path.to_str().unwrap(), "--n", "41", "--mode", "distinct",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["config"]["a"], 0.0);
    assert_eq!(v["config"]["b"], 1.0);
}

#[test]
fn sampled_field_through_c1_pipeline() {
    // linear-offdiag sampled on an even grid (the coalescence at 0 falls
    // mid-cell, where linear interpolation is smooth).
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("samples.csv");
    let rows = 402;
    let mut body = String::from("t,f,g,h_re,h_im\n");
    for i in 0..rows {
        let t = -1.0 + 2.0 * i as f64 / (rows - 1) as f64;
        body.push_str(&format!("{:.17e},0,0,{:.17e},0\n", t, t));
    }
    std::fs::write(&path, body).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "diagonalize", "--input", path.to_str().unwrap(), "--n", "1001", "--mode", "c1",
        "--out", out_dir.to_str().unwrap(), "--json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let csv = std::fs::read_to_string(out_dir.join("solution.csv")).unwrap();
    // The reconstructed diagonal tracks (t, -t).
    let mut max_err = 0.0f64;
    for line in csv.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let (t, d1, d2) = (cells[0], cells[9], cells[10]);
        max_err = max_err.max((d1 - t).abs().max((d2 + t).abs()));
    }
    assert!(max_err <= 1e-6, "diagonal error {:e}", max_err);
}

#[test]
fn timings_flag_adds_timing_field() {
    let out = run(&["diagonalize", "--gallery", "pauli-x", "--n", "11", "--json", "--timings"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["timing_ms"].as_f64().is_some());
}

#[test]
fn atomic_write_leaves_no_temp_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    run(&[
        "diagonalize", "--gallery", "pauli-x", "--n", "11", "--out",
        out_dir.to_str().unwrap(),
    ]);
    let names: Vec<String> = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().to_string())
        .collect();
    assert!(names.iter().all(|n| !n.ends_with(".tmp")), "{:?}", names);
    assert!(Path::new(&out_dir).join("solution.csv").exists());
    assert!(Path::new(&out_dir).join("report.json").exists());
}
