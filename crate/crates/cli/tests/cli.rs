use std::process::Command;

fn se3ad(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_se3ad")).args(args).output().unwrap()
}

#[test]
fn verify_all_succeeds() {
    let out = se3ad(&["verify"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains(", 0 failed"));
}

#[test]
fn bench_json_has_seven_rows() {
    let out = se3ad(&["bench", "--format", "json", "--repeats", "3", "--warmup", "0"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 7);
    assert_eq!(v["rows"][5]["nan_count"], 36);
}

#[test]
fn bench_csv_subset() {
    let out = se3ad(&["bench", "--format", "csv", "--rows", "5,7", "--repeats", "3", "--warmup", "0"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 3);
}

#[test]
fn bad_arguments_fail() {
    assert!(!se3ad(&["bench", "--rows", "9"]).status.success());
    assert!(!se3ad(&["verify", "--suite", "nope"]).status.success());
    assert!(!se3ad(&["bench", "--repeats", "1"]).status.success());
}
