use std::fs;
use std::process::Command;

use darboux::cli::{run, VERSION};
use serde_json::Value;

fn darboux(args: &[&str]) -> (i32, Value, String) {
    let mut argv = vec!["darboux"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(&argv, &mut out, &mut err);
    let json = serde_json::from_slice(&out).unwrap_or(Value::Null);
    (code, json, String::from_utf8(err).unwrap())
}

#[test]
fn diagnose_reports_order_one_for_the_swapped_pair() {
    let (code, j, _) = darboux(&["diagnose", "lindeg2"]);
    assert_eq!(code, 0);
    assert_eq!(j["report"]["overall_darboux_order_le1"], true);
    assert_eq!(j["version"], VERSION);
    assert_eq!(j["config"]["system"], "lindeg2");
    assert_eq!(j["config"]["seed"], 1);
    assert_eq!(j["config"]["samples"], 200);
}

#[test]
fn laplace_on_the_shifted_family_does_not_terminate() {
    let (code, j, _) = darboux(&["laplace", "shifted3", "--i", "1", "--depth", "2"]);
    assert_eq!(code, 0);
    assert_eq!(j["report"]["sequence"]["outcome"]["kind"], "not_terminated");
    assert_eq!(j["config"]["options"]["depth"], 2);
}

#[test]
fn laplace_single_step() {
    let (code, j, _) = darboux(&["laplace", "shifted3", "--i", "1", "--j", "2"]);
    assert_eq!(code, 0);
    assert_eq!(j["report"]["step"]["lambdas"][1], "u1 + u2 + u3");
}

#[test]
fn solve_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, j, err) = darboux(&[
        "solve",
        "order0_decoupled",
        "--phi",
        "v",
        "--phi",
        "v",
        "--out",
        out,
    ]);
    assert_eq!(code, 0, "{err}");
    let max = j["report"]["residual"]["max"].as_f64().unwrap();
    assert!(max <= 1e-5, "{max}");
    assert_eq!(j["report"]["route"], "b_zero");
    for f in ["solution.csv", "solution.gp", "solve.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let csv = dir.path().join("solution.csv");
    let (code, v, err) = darboux(&[
        "verify",
        "order0_decoupled",
        "--solution",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let again = v["report"]["residual"]["max"].as_f64().unwrap();
    assert!(
        (again - max).abs() <= 1e-9 * max.max(1e-12),
        "{again} vs {max}"
    );
    assert_eq!(
        v["report"]["residual"]["checked"],
        j["report"]["residual"]["checked"]
    );
}

#[test]
fn failed_gate_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, j, err) = darboux(&[
        "solve",
        "order0_decoupled",
        "--phi",
        "v",
        "--phi",
        "v",
        "--gate",
        "1e-20",
        "--out",
        out,
    ]);
    assert_eq!(code, 2);
    assert_eq!(j["gates"]["passed"], false);
    assert!(err.contains("gate failed"));
}

#[test]
fn usage_and_input_errors_exit_with_one() {
    assert_eq!(darboux(&["diagnose"]).0, 1);
    assert_eq!(darboux(&["frobnicate", "lindeg2"]).0, 1);
    let (code, _, err) = darboux(&["diagnose", "no_such_system"]);
    assert_eq!(code, 1);
    assert!(err.contains("neither a file nor a built-in"));
    assert_eq!(darboux(&["diagnose", "lindeg2", "--tol", "-1"]).0, 1);
    assert_eq!(darboux(&["solve", "lindeg2", "--phi", "1"]).0, 1);
    assert_eq!(
        darboux(&["solve", "lindeg2", "--phi", "1", "--phi", "1", "--grid", "1,1,2"]).0,
        1
    );
    assert_eq!(darboux(&["laplace", "shifted3", "--i", "4"]).0, 1);
}

#[test]
fn refused_solve_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, err) = darboux(&[
        "solve", "shifted3", "--phi", "v", "--phi", "v", "--phi", "v", "--out", out,
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("force"), "{err}");
}

#[test]
fn system_files_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hopf.toml");
    fs::write(
        &path,
        "n = 2\n[lambda]\nl1 = \"u1\"\nl2 = \"u2\"\n[domain]\nu1 = [1.0, 2.0]\nu2 = [3.0, 4.0]\n",
    )
    .unwrap();
    let (code, j, err) = darboux(&[
        "diagnose",
        path.to_str().unwrap(),
        "--seed",
        "9",
        "--samples",
        "50",
        "--tol",
        "1e-8",
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(j["config"]["seed"], 9);
    assert_eq!(j["config"]["samples"], 50);
    assert_eq!(j["config"]["tol"], 1e-8);
    assert_eq!(j["report"]["darboux_order0"][0]["holds"], true);
}

#[test]
fn congruence_writes_charts_and_meshes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, j, err) = darboux(&["congruence", "lindeg2", "--pair", "2,1", "--out", out]);
    assert_eq!(code, 0, "{err}");
    for f in [
        "pairs.csv",
        "chart1.csv",
        "chart2.csv",
        "chart1.obj",
        "chart2.obj",
        "congruence.json",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let rel = &j["report"]["invariance"]["relations"];
    // (2, 1): ∂_1 M̄ = λ^2 ∂_1 N̄ checked, the 2-direction degenerate
    assert!(rel[0]["residual"].as_f64().unwrap() <= 1e-6);
    assert!(rel[1]["degenerate"].is_string());
}

#[test]
fn reports_have_sorted_keys_and_repeat_exactly() {
    let run_text = || {
        let mut out = Vec::new();
        run(
            ["darboux", "diagnose", "shifted3"],
            &mut out,
            &mut Vec::new(),
        );
        String::from_utf8(out).unwrap()
    };
    let a = run_text();
    assert_eq!(a, run_text());
    let pos = |k: &str| a.find(&format!("\n  \"{k}\"")).unwrap();
    assert!(
        pos("config") < pos("gates")
            && pos("gates") < pos("report")
            && pos("report") < pos("version")
    );
}

#[test]
fn binary_prints_version_and_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_darboux");
    let v = Command::new(bin).arg("--version").output().unwrap();
    assert!(v.status.success());
    assert!(String::from_utf8_lossy(&v.stdout).contains(env!("CARGO_PKG_VERSION")));
    let bad = Command::new(bin)
        .args(["diagnose", "no_such_system"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    let ok = Command::new(bin)
        .args(["diagnose", "constant2"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
}
