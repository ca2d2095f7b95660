use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

const E_SQRT2: &str = "ellipsoid:1,1.4142135623730951";

fn reebkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reebkit"))
        .args(args)
        .env_remove("REEBKIT_LOG")
        .output()
        .expect("failed to spawn reebkit")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("terminated by signal")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is not JSON")
}

#[test]
fn index_table_for_short_orbit() {
    let o = reebkit(&["index", "--system", E_SQRT2, "--orbit", "K", "-k", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    let rows = v["rows"].as_array().unwrap();
    let mus: Vec<i64> = rows.iter().map(|r| r["mu"].as_i64().unwrap()).collect();
    assert_eq!(mus, [3, 7, 11]);
    let rho1 = rows[0]["rho"].as_f64().unwrap();
    assert!((rho1 - (1.0 + 1.0 / 2f64.sqrt())).abs() < 1e-6);
    assert_eq!(v["seed"], 0);
}

#[test]
fn index_csv_and_spectral() {
    let o = reebkit(&[
        "index",
        "--system",
        E_SQRT2,
        "--orbit",
        "K'",
        "-k",
        "2",
        "--spectral",
        "--csv",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "iterate,period,contractible,mu,rho,degenerate,mu_spectral"
    );
    // K' has period √2 and transverse rotation √2/2 per turn in the disk class: μ = 5, 9.
    assert!(lines[1].starts_with("1,1.41421356237,true,5,"));
    assert!(lines[1].ends_with(",false,5"));
    assert!(lines[2].starts_with("2,2.82842712475,true,9,"));
}

#[test]
fn round_system_is_degenerate() {
    let o = reebkit(&["index", "--system", "round", "-k", "2"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate"));
}

#[test]
fn missing_config_is_usage_error() {
    let o = reebkit(&["--config", "/definitely/not/here.json", "lens", "5"]);
    assert_eq!(code(&o), 1);
    let o = reebkit(&["index", "-k", "2"]);
    assert_eq!(code(&o), 1, "no system given");
    let o = reebkit(&["no-such-command"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn config_file_supplies_system_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"system": {"family": "ellipsoid", "a": 1.0, "b": 1.4142135623730951}, "seed": 11}"#,
    )
    .unwrap();
    let o = reebkit(&["--config", cfg.to_str().unwrap(), "index", "-k", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["seed"], 11);
    assert_eq!(v["rows"][0]["mu"], 3);
}

#[test]
fn verify_writes_report_svg_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = reebkit(&[
        "verify",
        "--system",
        E_SQRT2,
        "--lens",
        "2,1",
        "--samples",
        "12",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
        "--svg",
        "--csv",
        "--jobs",
        "2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["seed"], 3);
    assert_eq!(v["dynamics"]["samples"].as_array().unwrap().len(), 12);
    let svg = fs::read_to_string(out.with_extension("svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<line").count(), 12);
    let csv = fs::read_to_string(out.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn verify_without_samples_is_skipped() {
    let o = reebkit(&["verify", "--system", E_SQRT2, "--lens", "2,1", "--samples", "0"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["dynamics"]["status"], "skipped");
    assert!(v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["name"] != "gss_returns"));
}

#[test]
fn verify_unwritable_output_is_usage_error() {
    let o = reebkit(&[
        "verify",
        "--system",
        E_SQRT2,
        "--lens",
        "2,1",
        "--samples",
        "0",
        "--out",
        "/nonexistent/dir/report.json",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn verify_failed_check_exits_three_and_keeps_report() {
    // A fixed-point tolerance below machine precision cannot be met; the check fails
    // but the run completes.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = reebkit(&[
        "verify",
        "--system",
        E_SQRT2,
        "--lens",
        "2,1",
        "--samples",
        "0",
        "--tol",
        "1e-300",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["passed"], false);
    let failed: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["fixed_point"]);
}

#[test]
fn lens_tables() {
    let o = reebkit(&["lens", "5"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["residues"], serde_json::json!([1, 2, 3, 4]));
    assert_eq!(v["homeomorphism_classes"], serde_json::json!([[1, 4], [2, 3]]));

    let v = stdout_json(&reebkit(&["lens", "7"]));
    assert_eq!(v["homotopy_equivalent"][0][1], true);
    assert_eq!(v["homeomorphic"][0][1], false);

    let v = stdout_json(&reebkit(&["lens", "2"]));
    assert_eq!(v["homeomorphism_classes"], serde_json::json!([[1]]));

    assert_eq!(code(&reebkit(&["lens", "1"])), 1);
}

#[test]
fn tree_validation_and_sigma() {
    let good = r#"{"bound": 10, "root": {"period": 3, "mu": 2, "children": [{"period": 1, "mu": 2}, {"period": 1.5, "mu": 2}]}}"#;
    let o = reebkit(&["tree-validate", good, "--sigma", "0.4"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["passed"], true);

    let bad = r#"{"bound": 10, "root": {"period": 3, "mu": 2, "children": [{"period": 2.8, "mu": 2}]}}"#;
    let o = reebkit(&["tree-validate", bad, "--sigma", "0.4"]);
    assert_eq!(code(&o), 3);
    assert_eq!(stdout_json(&o)["violations"][0]["rule"], "a");

    let o = reebkit(&[
        "sigma",
        "--periods",
        "3.141592653589793,6.283185307179586,9.42477796076938",
        "--action",
        "10",
    ]);
    assert_eq!(code(&o), 0);
    let s = stdout_json(&o)["sigma"].as_f64().unwrap();
    assert!((s - std::f64::consts::FRAC_PI_2).abs() < 1e-11);

    assert_eq!(code(&reebkit(&["sigma", "--periods", "1,1.0000000001"])), 2);
}

#[test]
fn return_map_single_and_batch() {
    let o = reebkit(&[
        "return-map",
        "--system",
        E_SQRT2,
        "--lens",
        "2,1",
        "--r",
        "0.5",
        "--theta",
        "1.0",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    let t = v["returns"][0]["return_time"].as_f64().unwrap();
    assert!((t - 2f64.sqrt() / 2.0).abs() < 1e-8);

    let a = reebkit(&[
        "return-map",
        "--system",
        E_SQRT2,
        "--lens",
        "2,1",
        "--samples",
        "6",
        "--seed",
        "4",
        "--jobs",
        "1",
    ]);
    let b = reebkit(&[
        "return-map",
        "--system",
        E_SQRT2,
        "--lens",
        "2,1",
        "--samples",
        "6",
        "--seed",
        "4",
        "--jobs",
        "3",
    ]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout, "output must not depend on the worker count");

    let o = reebkit(&[
        "return-map",
        "--system",
        E_SQRT2,
        "--lens",
        "2,1",
        "--r",
        "1.5",
        "--theta",
        "0",
    ]);
    assert_eq!(code(&o), 1);
}
