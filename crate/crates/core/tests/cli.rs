//! The command-line front end: config handling, CSV output, reproducibility
//! and check exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn thplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thplab")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "B=8\nsnr_db=10\n");
    let out = thplab(&["fig1", "--config", &cfg, "--trials", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
}

#[test]
fn fig1_writes_csv_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fig1.cfg", "# quick\nK=20\ngrid=0,10,20\nM=16\n");
    let csv = dir.path().join("fig1.csv");
    let out = thplab(&["fig1", "--config", &cfg, "--trials", "20", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut r = csv::Reader::from_path(&csv).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(str::to_owned).collect();
    assert_eq!(header[0], "p_db");
    assert!(header.iter().any(|h| h == "thp_q_lo_mean") && header.iter().any(|h| h == "thp_q_lo_se"));
    assert_eq!(r.records().count(), 3);
}

#[test]
fn same_seed_gives_identical_output() {
    let args = ["fig2", "--trials", "10", "--backend", "cell-approx"];
    let cfg_dir = tempfile::tempdir().unwrap();
    let cfg = write(cfg_dir.path(), "fig2.cfg", "grid=10,40\n");
    let run = |seed: &str| {
        let mut a = args.to_vec();
        a.extend(["--config", &cfg, "--seed", seed]);
        let out = thplab(&a);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let first = run("7");
    assert_eq!(first, run("7"));
    assert_ne!(first, run("8"));
}

#[test]
fn check_mode_reports_failures_through_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    // Too few users and trials for the coverage targets.
    let cfg = write(dir.path(), "cov.cfg", "grid=1000,2000\n");
    let out = thplab(&["coverage", "--config", &cfg, "--trials", "3", "--check"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[FAIL]"));
    let header = String::from_utf8_lossy(&out.stdout);
    assert!(header.starts_with("users,"), "{header}");
}

#[test]
fn validate_cdf_runs_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.cfg", "grid=2\nK=500\n");
    let out = thplab(&["validate-cdf", "--config", &cfg, "--trials", "5000", "--check"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("law,samples,in_support"), "{stdout}");
    assert_eq!(stdout.lines().count(), 1 + 5);
    assert!(out.status.code() == Some(0) || out.status.code() == Some(2));
}

#[test]
fn bad_flags_are_rejected() {
    assert!(!thplab(&["fig1", "--backend", "dpc"]).status.success());
    assert!(!thplab(&["fig5"]).status.success());
    assert!(!thplab(&["fig1", "--trials", "0"]).status.success());
}
