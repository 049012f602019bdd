use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hkgc::liecore::{expm, GroupSpec, Matrix, C64};
use hkgc::moduli::ModuliPoint;
use hkgc::nahm::{nahm_residual, residual_l2, NahmQuadruple};
use serde_json::Value;

fn hkgc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hkgc")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let last = text.lines().last().expect("stderr has a line");
    serde_json::from_str(last).expect("last stderr line is JSON")
}

fn write_point(dir: &Path, name: &str, u: &str, eta: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, format!(r#"{{"U": {u}, "eta": {eta}}}"#)).unwrap();
    path.to_string_lossy().into_owned()
}

fn independent_residual(artifact: &Value) -> f64 {
    let q: NahmQuadruple = serde_json::from_value(artifact["quadruple"].clone()).unwrap();
    residual_l2(&GroupSpec::su2(), &nahm_residual(&q))
}

#[test]
fn identity_solve_succeeds_with_zero_residual() {
    let out = hkgc(&["solve", "--grid", "32"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["N"], 32);
    assert!(v["certificate"]["real_residual"].as_f64().unwrap() < 1e-14);
    assert!(independent_residual(&v) < 1e-14);
}

#[test]
fn non_square_eta_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_point(dir.path(), "bad.json", "[[[1,0],[0,0]],[[0,0],[1,0]]]", "[[[0,0],[0,0]],[[0,0]]]");
    let out = hkgc(&["solve", "--point", &p]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    let e = stderr_json(&out);
    assert_eq!(e["exit_code"], 1);
    assert_eq!(e["error"], "invalid_input");
}

#[test]
fn diagonal_point_solves_to_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let (e, ei) = (1f64.exp(), (-1f64).exp());
    let u = format!("[[[{e},0],[0,0]],[[0,0],[{ei},0]]]");
    let p = write_point(dir.path(), "diag.json", &u, "[[[0,1],[0,0]],[[0,0],[0,-1]]]");
    let out = hkgc(&["solve", "--point", &p, "--grid", "128"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!(v["certificate"]["real_residual"].as_f64().unwrap() <= 1e-8);
    assert!(independent_residual(&v) <= 1e-8);
}

#[test]
fn unreachable_tolerance_exits_with_solver_failure() {
    let c = |re, im| C64::new(re, im);
    let x = Matrix::from_row_slice(2, 2, &[c(0.3, 0.4), c(0.5, -0.2), c(-0.1, 0.6), c(-0.3, -0.4)]);
    let eta = Matrix::from_row_slice(2, 2, &[c(0.2, 0.1), c(0.4, 0.0), c(0.0, -0.3), c(-0.2, -0.1)]);
    let m = ModuliPoint::new(&GroupSpec::su2(), expm(&x), eta).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("generic.json");
    fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(hkgc(&["solve", "--point", p, "--grid", "32", "--tol", "1e-6"]).status.code(), Some(0));
    let out = hkgc(&["solve", "--point", p, "--grid", "32", "--tol", "1e-30"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "non_convergence");
}

#[test]
fn unknown_suite_is_an_input_error() {
    let out = hkgc(&["verify", "bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("bogus"));
}

#[test]
fn unknown_flag_and_group_are_input_errors() {
    assert_eq!(hkgc(&["solve", "--nonsense"]).status.code(), Some(1));
    assert_eq!(hkgc(&["solve", "--group", "so3"]).status.code(), Some(1));
    assert_eq!(hkgc(&["solve", "--grid", "4"]).status.code(), Some(1));
}

#[test]
fn twistor_suite_passes_with_seed_42() {
    let out = hkgc(&["verify", "twistor", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["passed"], true);
    let checks = v["checks"].as_array().unwrap();
    let reext = checks.iter().filter(|c| c["name"].as_str().unwrap().ends_with("reextraction")).count();
    assert_eq!(reext, 12);
}

#[test]
fn twistor_command_reports_twelve_zeta() {
    let out = hkgc(&["twistor", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 12);
    for r in reports {
        for key in ["zeta", "deviation_group", "deviation_eta", "residuals"] {
            assert!(r.get(key).is_some(), "{key}");
        }
        assert!(r["deviation_group"].as_f64().unwrap() <= 1e-7);
    }
}

#[test]
fn quaternion_suite_at_origin_passes_as_csv() {
    let out = hkgc(&["verify", "quaternion", "--points", "0", "--grid", "16", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("suite,name,measured,tolerance,passed"));
    assert_eq!(lines.filter(|l| l.ends_with(",true")).count(), 4);
}

#[test]
fn origin_metric_is_the_constant_gram_and_reports_both_grids() {
    let out = hkgc(&["metric", "--grid", "16", "--extrapolate"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["grids"], serde_json::json!([16, 32]));
    assert!(v["omega_c_deviation"].as_f64().unwrap() < 1e-8);
    let gram = v["report"]["gram"].as_array().unwrap();
    for (i, row) in gram.iter().enumerate() {
        for (j, x) in row.as_array().unwrap().iter().enumerate() {
            let want = if i != j { 0.0 } else if i < 6 { 1.0 } else { 4.0 };
            assert!((x.as_f64().unwrap() - want).abs() < 1e-8, "({i},{j})");
        }
    }
    let grids: Vec<u64> = v["report"]["residuals"].as_array().unwrap().iter().map(|r| r["N"].as_u64().unwrap()).collect();
    assert!(grids.contains(&16) && grids.contains(&32));
}

#[test]
fn abelian_metric_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_point(dir.path(), "u1.json", "[[[0.5403023058681398,0.8414709848078965]]]", "[[[0.7,-0.2]]]");
    let at_point = stdout_json(&hkgc(&["metric", "--group", "u1", "--grid", "16", "--point", &p]));
    let at_origin = stdout_json(&hkgc(&["metric", "--group", "u1", "--grid", "16"]));
    let flat = |v: &Value| -> Vec<f64> {
        v["report"]["gram"].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap())).collect()
    };
    for (a, b) in flat(&at_point).iter().zip(flat(&at_origin)) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out_path = dir.path().join("solve.json");
    fs::write(&cfg, format!("# test run\ngrid = 16\ntol = 1e-9\nout = {}\n", out_path.display())).unwrap();
    let out = hkgc(&["solve", "--config", cfg.to_str().unwrap(), "--grid", "24"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["N"], 24);
    assert_eq!(v["tol"], 1e-9);

    fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(hkgc(&["solve", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let args = ["metric", "--grid", "16", "--seed", "7"];
    assert_eq!(hkgc(&args).stdout, hkgc(&args).stdout);
    let args = ["twistor", "--seed", "3", "--grid", "64"];
    assert_eq!(hkgc(&args).stdout, hkgc(&args).stdout);
}
