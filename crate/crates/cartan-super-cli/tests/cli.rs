//! End-to-end checks of the command-line interface: flags, exit codes,
//! JSON output shapes, and table generation.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cartan-super"))
}

#[test]
fn build_w_reports_dimension_60() {
    let out = bin()
        .args([
            "build", "--family", "W", "--m", "1", "--n", "2", "--p", "5", "--t", "1",
            "--no-constants",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["dim"], 60);
    assert_eq!(v["torus_dim"], 3);
    assert!(v["basis"].as_array().unwrap().len() == 60);
}

#[test]
fn build_includes_structure_constants_by_default() {
    let out = bin()
        .args(["build", "--family", "K", "--m", "1", "--n", "2", "--p", "5", "--t", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["structure_constants"].as_array().unwrap().len() > 100);
}

#[test]
fn invalid_spec_exits_2_with_named_constraint() {
    let out = bin()
        .args(["build", "--family", "H", "--m", "3", "--n", "2", "--p", "5", "--t", "1,1,1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("H requires even m"), "stderr: {err}");
}

#[test]
fn sko_m3_build_carries_warning() {
    let out = bin()
        .args([
            "build", "--family", "SKO", "--m", "3", "--p", "5", "--t", "1,1,1", "--lambda",
            "1", "--no-constants",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let warnings = v["warnings"].as_array().unwrap();
    assert!(!warnings.is_empty());
    assert!(warnings[0].as_str().unwrap().contains("m=3"));
}

#[test]
fn der_reports_outer_dimension() {
    let out = bin()
        .args([
            "der", "--family", "HO", "--m", "3", "--p", "5", "--t", "1,1,1", "--mode", "both",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["outer"], 5);
    assert_eq!(v["matched_expected"], true);
    assert!(v["metadata"]["runtime_ms"].is_number());
}

#[test]
fn der_of_derived_k() {
    let out = bin()
        .args([
            "der", "--family", "K", "--m", "1", "--n", "2", "--p", "5", "--t", "1",
            "--variant", "derived1",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["outer"], 0);
}

#[test]
fn build_output_is_byte_stable() {
    let run = || {
        bin()
            .args(["build", "--family", "S", "--m", "2", "--n", "2", "--p", "5", "--t", "1,1"])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn tables_heights_on_small_grid() {
    let dir = std::env::temp_dir().join("cartan_super_cli_test");
    std::fs::create_dir_all(&dir).unwrap();
    let grid = dir.join("small.grid");
    std::fs::write(
        &grid,
        "family=W m=1 n=2 p=5 t=1\nfamily=K m=1 n=4 p=5 t=1\n",
    )
    .unwrap();
    let out = bin()
        .args(["tables", "heights", "--grid"])
        .arg(&grid)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "family,variant,m,n,p,t,lambda,computed,expected,match"
    );
    assert!(text.contains("W,plain,1,2,5,1,,5,5,true"));
    assert!(text.contains("K,plain,1,4,5,1,,9,9,true"));
}

#[test]
fn tables_outer_dims_small() {
    let dir = std::env::temp_dir().join("cartan_super_cli_test");
    std::fs::create_dir_all(&dir).unwrap();
    let grid = dir.join("outer.grid");
    std::fs::write(&grid, "family=S m=2 n=2 p=5 t=1,1 variant=derived1\n").unwrap();
    let out = bin()
        .args(["tables", "outer-dims", "--grid"])
        .arg(&grid)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("S,derived1,2,2,5,1;1,,3,3,true"));
}

#[test]
fn malformed_grid_is_rejected_with_location() {
    let dir = std::env::temp_dir().join("cartan_super_cli_test");
    std::fs::create_dir_all(&dir).unwrap();
    let grid = dir.join("bad.grid");
    std::fs::write(&grid, "family=QQ m=1 n=2 p=5 t=1\n").unwrap();
    let out = bin()
        .args(["tables", "heights", "--grid"])
        .arg(&grid)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1"), "stderr: {err}");
}

#[test]
fn verify_single_group_runs() {
    let out = bin()
        .env("CARTAN_SKIP_SLOW", "1")
        .args(["verify", "--suite", "acceptance", "--only", "decompositions"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("[PASS] decompositions"));
    assert!(text.contains("checks:"));
}

#[test]
fn unknown_suite_is_rejected() {
    let out = bin()
        .args(["verify", "--suite", "nope"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn jobs_flag_preserves_row_order() {
    let dir = std::env::temp_dir().join("cartan_super_cli_test");
    std::fs::create_dir_all(&dir).unwrap();
    let grid = dir.join("order.grid");
    std::fs::write(
        &grid,
        "family=W m=1 n=2 p=5 t=1\nfamily=K m=1 n=2 p=5 t=1\nfamily=S m=2 n=2 p=5 t=1,1\n",
    )
    .unwrap();
    let sequential = bin()
        .args(["tables", "heights", "--grid"])
        .arg(&grid)
        .output()
        .unwrap();
    let parallel = bin()
        .args(["tables", "heights", "--jobs", "3", "--grid"])
        .arg(&grid)
        .output()
        .unwrap();
    assert!(parallel.status.success());
    assert_eq!(sequential.stdout, parallel.stdout);
}
