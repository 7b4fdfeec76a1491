use std::fs;

use liouville::cli::{main_with_args, run, Command, RunConfig};
use liouville::error::Error;
use serde_json::Value;

fn args(out: &std::path::Path, rest: &[&str]) -> Vec<String> {
    let mut v = vec!["liouville".to_string()];
    v.extend(rest.iter().map(|s| s.to_string()));
    v.push("--out".into());
    v.push(out.display().to_string());
    v
}

fn report(dir: &std::path::Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn lemma_run_passes_and_writes_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let code = main_with_args(args(dir.path(), &["verify-lemma", "--lemma", "elemshear"]));
    assert_eq!(code, 0);
    let r = report(dir.path());
    assert_eq!(r["passed"], Value::Bool(true));
    assert!(r["result"]["kernel_checks"][0]["agreement"].as_f64().unwrap() < 1e-4);
    assert!(dir.path().join("kernel_checks.csv").exists());
}

#[test]
fn crossing_mass_integrates_to_four_ell() {
    let dir = tempfile::tempdir().unwrap();
    let code = main_with_args(args(dir.path(), &["integrate", "--phi", "crossing-mass", "--ell", "1", "--mollifier", "0.2"]));
    assert_eq!(code, 0);
    let v = report(dir.path())["result"]["quadrature"]["value"].as_f64().unwrap();
    assert!((v - 4.0).abs() < 4e-4, "{v}");
}

#[test]
fn usage_and_config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(main_with_args(args(dir.path(), &["frobnicate"])), 1);
    assert_eq!(main_with_args(args(dir.path(), &["integrate", "--phi", "nope"])), 1);
    assert_eq!(main_with_args(args(dir.path(), &["verify-lemma"])), 1);
    assert_eq!(main_with_args(args(dir.path(), &["series", "--cocycle", "dirac:0/1,2/3"])), 1);
    assert_eq!(main_with_args(["liouville", "--help"]), 0);
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = RunConfig {
        n: 1.0,
        output_path: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    match run(&bad) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "n"),
        other => panic!("{other:?}"),
    }
    let path = dir.path().join("config.json");
    fs::write(&path, r#"{"test_function": "bump", "radius": 3}"#).unwrap();
    let err = RunConfig::from_json_file(&path).unwrap_err().to_string();
    assert!(err.contains("radius"), "{err}");
}

#[test]
fn tolerance_failure_exits_two_and_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    // one coarse step and no extrapolation: the difference quotient misses
    let code = main_with_args(args(dir.path(), &["kernel", "--leaf", "0/1,1/1", "--fd-steps", "0.8"]));
    assert_eq!(code, 2);
    let r = report(dir.path());
    assert_eq!(r["passed"], Value::Bool(false));
    assert_eq!(r["checks"][0]["passed"], Value::Bool(false));
    assert!(r["config_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn reports_are_reproducible_up_to_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig {
        command: Command::BoundaryScan,
        output_path: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timestamp");
        serde_json::to_string(&v).unwrap()
    };
    run(&config).unwrap();
    let first = strip(report(dir.path()));
    let csv1 = fs::read(dir.path().join("boundary.csv")).unwrap();
    run(&config).unwrap();
    assert_eq!(first, strip(report(dir.path())));
    assert_eq!(csv1, fs::read(dir.path().join("boundary.csv")).unwrap());
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    fs::write(
        &path,
        r#"{"test_function": "pin", "cocycle": {"kind": "seeded", "seed": 7, "bound": 0.3}, "n": 4}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let code = main_with_args(args(&out, &["verify-lemma", "--config", path.to_str().unwrap(), "--lemma", "dercomshear"]));
    assert_eq!(code, 0);
    let r = report(&out);
    assert_eq!(r["config"]["test_function"], "pin");
    assert_eq!(r["config"]["n"], 4.0);
}
