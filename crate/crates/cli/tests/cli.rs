//! End-to-end checks of the binary: exit codes, determinism, output shape.

use assert_cmd::Command;
use predicates::prelude::*;

fn smoothdist() -> Command {
    Command::cargo_bin("smoothdist").unwrap()
}

#[test]
fn no_args_prints_usage_and_exits_1() {
    smoothdist()
        .assert()
        .code(1)
        .stderr(predicate::str::contains("Usage"));
}

#[test]
fn unknown_flag_exits_1() {
    smoothdist()
        .args(["psi", "--x", "100", "--y", "10", "--frobnicate"])
        .assert()
        .code(1);
}

#[test]
fn psi_emits_single_json_object() {
    let out = smoothdist()
        .args(["psi", "--x", "1e4", "--y", "100", "--yprime", "1"])
        .assert()
        .success()
        .get_output()
        .stdout
        .clone();
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["header"]["tool"], "smoothdist");
    assert_eq!(v["result"]["psi_exact"], 3716); // frozen from trial-division enumeration
    assert!(v["result"]["ht_estimate"].as_f64().unwrap() > 0.0);
}

#[test]
fn identical_config_is_byte_identical() {
    let run = || {
        smoothdist()
            .args(["weyl", "--x", "2e4", "--y", "200", "--k", "2", "--theta", "0.4142135623730951"])
            .assert()
            .success()
            .get_output()
            .stdout
            .clone()
    };
    assert_eq!(run(), run());
}

#[test]
fn hypothesis_violation_exits_2() {
    // q = 5 with y' = 4 has a prime factor at or above y'.
    smoothdist()
        .args([
            "equid", "--mode", "progression", "--n", "1e4", "--y", "500", "--yprime", "4", "--q",
            "5",
        ])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("hypothesis"));
}

#[test]
fn capacity_violation_exits_3() {
    smoothdist()
        .args(["abc", "--n", "2e5", "--y", "400"])
        .assert()
        .code(3);
}

#[test]
fn unknown_override_is_usage_error() {
    smoothdist()
        .args(["psi", "--x", "100", "--y", "10", "--override", "nonsense=3"])
        .assert()
        .code(1);
}

#[test]
fn overrides_are_echoed() {
    let out = smoothdist()
        .args([
            "weyl",
            "--x",
            "1e4",
            "--y",
            "100",
            "--theta",
            "1/3",
            "--override",
            "weyl_c=0.07",
        ])
        .assert()
        .success()
        .get_output()
        .stdout
        .clone();
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["header"]["overrides"]["weyl_c"], 0.07);
    assert_eq!(v["result"]["config"]["c"], 0.07);
}

#[test]
fn csv_format_flattens() {
    let out = smoothdist()
        .args(["abc", "--n", "3000", "--y", "60", "--format", "csv"])
        .assert()
        .success()
        .get_output()
        .stdout
        .clone();
    let text = String::from_utf8(out).unwrap();
    assert!(text.lines().any(|l| l.starts_with("result.count,")));
    assert!(text.lines().any(|l| l.starts_with("result.ratio,")));
}

#[test]
fn linsys_round_trip_through_file() {
    let dir = std::env::temp_dir().join(format!("smoothdist-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("abc.sys");
    std::fs::write(
        &path,
        "s 2\nr 3\nform 1 0\nform 0 1\nform 1 1\nshifts 0 0 0\nbody simplex 0 0 1 0 0 1\nn 2000\ny 50\nyprime 1\n",
    )
    .unwrap();
    let out = smoothdist()
        .args(["linsys", "--file", path.to_str().unwrap()])
        .assert()
        .success()
        .get_output()
        .stdout
        .clone();
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert!(v["result"]["canonical"]
        .as_str()
        .unwrap()
        .contains("body simplex"));
    assert!(v["result"]["count"]["count"].as_f64().unwrap() > 0.0);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn recur_recovers_denominator() {
    let out = smoothdist()
        .args([
            "recur",
            "--n",
            "1e5",
            "--y",
            "1000",
            "--theta",
            "0.14285714285814286", // 1/7 + 1e-12
            "--eps",
            "0.05",
        ])
        .assert()
        .success()
        .get_output()
        .stdout
        .clone();
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["result"]["recovered"]["q"], 7);
}
