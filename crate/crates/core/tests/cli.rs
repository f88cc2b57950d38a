use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ou-lusin"));
    c.env_remove("OU_LUSIN_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn check<'a>(r: &'a Value, id: &str) -> &'a Value {
    r["checks"].as_array().unwrap().iter().find(|c| c["id"] == id).unwrap_or_else(|| panic!("no check {id}"))
}

fn out_arg(dir: &tempfile::TempDir) -> String {
    dir.path().to_str().unwrap().to_string()
}

#[test]
fn empty_suite_list_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--out", &out_arg(&dir)]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(dir.path());
    assert_eq!(r["summary"]["total"], 0);
    assert!(r["checks"].as_array().unwrap().is_empty());
}

#[test]
fn kernels_suite_reports_values_and_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "kernels", "--out", &out_arg(&dir)]);
    let r = report(dir.path());
    let q = check(&r, "q-total-integral");
    assert!((q["details"]["value"].as_f64().unwrap() - 4.604780234).abs() < 1e-8);
    for id in ["representation-identity", "smoothing-identity-cesaro"] {
        assert_eq!(check(&r, id)["status"], "pass");
        assert!(check(&r, id)["value"].as_f64().unwrap() <= 1e-6);
    }
    // the A_s form of the integration-by-parts identity does not hold
    assert_eq!(check(&r, "smoothing-identity")["status"], "fail");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"seed\": 3,\n  \"sedes\": 4\n}\n").unwrap();
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&dir)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("sedes") && err.contains("line 3"), "{err}");
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["verify", "kernel", "--out", &out_arg(&dir)]).status.code(), Some(2));
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for _ in 0..2 {
        let o = run(&["verify", "spectral", "orlicz", "--seed", "17", "--out", &out_arg(&dir)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
        texts.push(std::fs::read_to_string(dir.path().join("report.json")).unwrap());
    }
    let cut = |s: &str| s[..s.find("\"timestamp\"").unwrap()].to_string();
    assert_eq!(cut(&texts[0]), cut(&texts[1]));
    assert_eq!(report(dir.path())["config"]["seed"], 17);
}

#[test]
fn different_seeds_change_the_report() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(&["verify", "spectral", "--seed", "1", "--out", &out_arg(&a)]);
    run(&["verify", "spectral", "--seed", "2", "--out", &out_arg(&b)]);
    assert_ne!(check(&report(a.path()), "commutation")["value"], check(&report(b.path()), "commutation")["value"]);
}

#[test]
fn output_directory_from_environment_and_flag() {
    let (env_dir, flag_dir) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let o = bin().args(["verify"]).env("OU_LUSIN_OUT", env_dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(env_dir.path().join("report.json").exists());
    bin().args(["verify", "--out", &out_arg(&flag_dir)]).env("OU_LUSIN_OUT", env_dir.path()).output().unwrap();
    assert!(flag_dir.path().join("report.json").exists());
}

#[test]
fn plot_data_and_report_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(&dir);
    run(&["verify", "kernels", "--out", &out]);
    let o = run(&["plot-data", "kernel-curves", "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("kernel-curves.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("s,u,q"));
    let half = csv.lines().find(|l| l.starts_with("0.5,")).unwrap();
    let u: f64 = half.split(',').nth(1).unwrap().parse().unwrap();
    assert!((u + 0.797885).abs() < 1e-6);

    let missing = run(&["plot-data", "lusin-mass", "--out", &out]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("lusin"));

    let summary = run(&["report", "--out", &out]);
    assert_eq!(summary.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&summary.stdout).contains("smoothing-identity"));
}

#[test]
fn report_without_a_run_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["report", "--out", &out_arg(&dir)]).status.code(), Some(2));
}
