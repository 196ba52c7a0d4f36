use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nhom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhom")).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON record")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is one JSON record")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

const PERIODIC_RUN: &str = r#"
[problem]
kind = "locally_periodic"
epsilon = 1e-6

[offline]
q = 8
m = 2

[offline.cell]
resolution = 8

[online]
n = 16
reference_n = 32
"#;

#[test]
fn offline_then_online() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", PERIODIC_RUN);
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();

    let o = nhom(&["offline", "--config", &cfg, "--out", out_s, "--jobs", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rec = stdout_json(&o);
    assert_eq!(rec["status"], "ok");
    assert_eq!(rec["command"], "offline");
    assert_eq!(rec["summary"]["cell_problems"], 64);
    for f in ["effective_table.json", "field.json", "offline_cost.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }

    let o = nhom(&["online", "--config", &cfg, "--out", out_s]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rec = stdout_json(&o)["summary"]["record"].clone();
    assert_eq!(rec["q"], 8);
    assert_eq!(rec["n"], 16);
    let h1 = rec["h1"].as_f64().unwrap();
    assert!(h1 > 0.0 && h1 < 0.5, "{h1}");
    let solution = std::fs::read_to_string(out.join("solution.csv")).unwrap();
    assert_eq!(solution.lines().count(), 1 + 33 * 33);
    assert!(std::fs::read_to_string(out.join("online.csv")).unwrap().starts_with("version,"));
}

#[test]
fn study_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "study.toml",
        r#"
[problem]
kind = "locally_periodic"
epsilon = 1e-6

[offline]
q = 1
m = 2
analytic = true

[online]
n = [8, 12, 16]
reference_n = 32

[coupling]
rule = "h1"

[output]
dir = "unused"
"#,
    );
    let out = dir.path().join("study");
    let out_s = out.to_str().unwrap();
    let o = nhom(&["study", "--config", &cfg, "--out", out_s]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["summary"]["runs"], 3);
    let study = std::fs::read_to_string(out.join("study.csv")).unwrap();
    assert_eq!(study.lines().count(), 4);

    let o = nhom(&["report", "--out", out_s]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["summary"]["rows"], 3);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("cost_report.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 3);
    assert!(out.join("cost_report.csv").is_file());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ens.toml",
        r#"
seed = 1

[problem]
kind = "checkerboard"
epsilon = 1e-6
k1 = 2.0
k2 = 8.0
p1 = 0.5

[ensemble]
realizations = 4
l_schedule = [2, 4, 8]
cells_per_epsilon = 2
"#,
    );
    let run = |seed: Option<&str>, name: &str| {
        let out = dir.path().join(name);
        let mut args = vec!["ensemble", "--config", &cfg, "--out", out.to_str().unwrap()];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        let o = nhom(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read_to_string(out.join("ensemble_samples.csv")).unwrap()
    };
    let from_config = run(None, "a");
    assert_eq!(run(Some("1"), "b"), from_config);
    assert_ne!(run(Some("2"), "c"), from_config);
}

#[test]
fn missing_config_is_a_json_error() {
    let o = nhom(&["study", "--config", "/nonexistent/study.toml"]);
    assert!(!o.status.success());
    let rec = stderr_json(&o);
    assert_eq!(rec["status"], "error");
    assert_eq!(rec["command"], "study");
    assert_eq!(rec["kind"], "io");
    assert!(rec["message"].as_str().unwrap().contains("/nonexistent/study.toml"));
    assert!(o.stdout.is_empty());
}

#[test]
fn invalid_config_is_a_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "[problem]\nkind = \"locally_periodic\"\nepsilon = 1e-6\n[offline]\nq = [16, 8]\nm = 2\n");
    let o = nhom(&["offline", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let rec = stderr_json(&o);
    assert_eq!(rec["status"], "error");
    assert_eq!(rec["kind"], "invalid_argument");
    assert!(rec["message"].as_str().unwrap().contains("increasing"), "{rec}");
}

#[test]
fn malformed_toml_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "[problem\nkind = 1\n");
    let o = nhom(&["study", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["kind"], "config");
}

#[test]
fn online_without_artifacts_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", PERIODIC_RUN);
    let o = nhom(&["online", "--config", &cfg, "--out", dir.path().join("empty").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["kind"], "io");
}

#[test]
fn zero_jobs_and_bad_flags_are_rejected() {
    let o = nhom(&["study", "--config", "x.toml", "--jobs", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["kind"], "invalid_argument");

    let o = nhom(&["study", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["kind"], "usage");
}
