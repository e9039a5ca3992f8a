use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ekm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ekm"))
        .args(args)
        .output()
        .expect("failed to launch ekm")
}

fn ok(args: &[&str]) -> Output {
    let out = ekm(args);
    assert!(
        out.status.success(),
        "ekm {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Weekly-looking seasonal counts, deterministic.
fn seasonal_csv(dir: &Path, name: &str) -> PathBuf {
    let path = dir.join(name);
    let mut text = String::from("week,cases\n");
    for t in 0..160 {
        let phase = 2.0 * std::f64::consts::PI * t as f64 / 52.0;
        let v = 200.0 + 150.0 * phase.sin().max(0.0) + 7.0 * ((t * 37 % 11) as f64 - 5.0);
        text.push_str(&format!("{t},{v}\n"));
    }
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_requested_rows() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        ok(&["generate", "--steps", "1000", "--switch", "10", "--eta", "0.01", "--seed", "7", "-o", s(path)]);
    }
    let text = fs::read_to_string(&a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,value,lambda"));
    assert_eq!(lines.count(), 1000);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn generate_rejects_zero_steps() {
    let dir = TempDir::new().unwrap();
    let out = ekm(&["generate", "--steps", "0", "-o", s(&dir.path().join("x.csv"))]);
    assert!(!out.status.success());
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn forecast_with_flu_settings() {
    let dir = TempDir::new().unwrap();
    let input = seasonal_csv(dir.path(), "flu.csv");
    let out_dir = dir.path().join("out");
    ok(&[
        "forecast", "--mode", "memory", "--omega", "3", "--delta", "1", "--delays", "4", "--eps-lambda", "0.05",
        "--eps-v", "0.25", "-i", s(&input), "--column", "cases", "--output-dir", s(&out_dir),
    ]);

    let manifest = read_json(&out_dir.join("manifest.json"));
    let cfg = &manifest["config"];
    assert_eq!(cfg["omega"], 3);
    assert_eq!(cfg["n_delays"], 4);
    assert_eq!(cfg["eps_v"], 0.25);
    assert_eq!(manifest["input"]["sha256"].as_str().unwrap().len(), 64);

    let preds = fs::read_to_string(out_dir.join("predictions.csv")).unwrap();
    assert_eq!(
        preds.lines().next(),
        Some("t,target_t,truth,prediction,source,d_lambda,d_v,flags")
    );
    // ω + n_delays = 7 is the first issue index, m − Δ − 1 = 158 the last
    assert_eq!(preds.lines().count() - 1, 158 - 7 + 1);

    let summary = read_json(&out_dir.join("summary.json"));
    assert_eq!(summary["mode"], "memory");
    assert!(summary["matches"]["match_rate"].is_number());
}

#[test]
fn sliding_summary_has_no_match_stats() {
    let dir = TempDir::new().unwrap();
    let input = seasonal_csv(dir.path(), "flu.csv");
    let out_dir = dir.path().join("out");
    ok(&["forecast", "--profile", "flu", "--mode", "sliding", "-i", s(&input), "--column", "cases", "--output-dir", s(&out_dir)]);
    let summary = read_json(&out_dir.join("summary.json"));
    assert_eq!(summary["mode"], "sliding");
    assert!(summary.get("matches").is_none());
    let preds = fs::read_to_string(out_dir.join("predictions.csv")).unwrap();
    assert!(preds.lines().skip(1).all(|l| l.contains(",sliding,")));
}

#[test]
fn eps_v_derived_and_echoed() {
    let dir = TempDir::new().unwrap();
    let input = seasonal_csv(dir.path(), "flu.csv");
    let out_dir = dir.path().join("out");
    ok(&[
        "forecast", "--omega", "3", "--delta", "1", "--delays", "4", "--eps-lambda", "0.05", "-i", s(&input),
        "--column", "cases", "--output-dir", s(&out_dir),
    ]);
    let eps_v = read_json(&out_dir.join("manifest.json"))["config"]["eps_v"].as_f64().unwrap();
    assert!((eps_v - 0.25).abs() < 1e-12);
}

#[test]
fn compare_reports_improvement() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("synth.csv");
    ok(&["generate", "--steps", "300", "--seed", "1", "-o", s(&input)]);
    let out_dir = dir.path().join("cmp");
    ok(&["compare", "--profile", "synthetic", "-i", s(&input), "--output-dir", s(&out_dir)]);
    let report = read_json(&out_dir.join("report.json"));
    assert!(report["improvement_pct"].is_number());
    assert_eq!(report["baseline_mode"], "sliding");
    assert_eq!(report["candidate_mode"], "memory");

    let plot = fs::read_to_string(out_dir.join("comparison.csv")).unwrap();
    assert!(plot.starts_with("t,target_t,truth,baseline,candidate,"));

    let same = dir.path().join("same");
    ok(&["compare", "--profile", "synthetic", "--baseline", "memory", "-i", s(&input), "--output-dir", s(&same)]);
    assert_eq!(read_json(&same.join("report.json"))["improvement_pct"], 0.0);
}

#[test]
fn bike_flags_accepted() {
    let dir = TempDir::new().unwrap();
    let input = seasonal_csv(dir.path(), "bike.csv");
    let out_dir = dir.path().join("out");
    ok(&[
        "compare", "--omega", "3", "--delays", "1", "--eps-lambda", "0.1", "--eps-v", "0.2", "-i", s(&input),
        "--column", "1", "--output-dir", s(&out_dir),
    ]);
    let cfg = &read_json(&out_dir.join("manifest.json"))["config"];
    assert_eq!(cfg["eps_lambda"], 0.1);
    assert_eq!(cfg["eps_v"], 0.2);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let input = seasonal_csv(dir.path(), "flu.csv");
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        ok(&["forecast", "--profile", "flu", "-i", s(&input), "--column", "cases", "--output-dir", s(&out_dir), "--export-bank"]);
        out_dir
    };
    let a = run("a");
    let b = run("b");
    for file in ["predictions.csv", "summary.json", "manifest.json", "bank.jsonl"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn config_file_sits_between_profile_and_flags() {
    let dir = TempDir::new().unwrap();
    let input = seasonal_csv(dir.path(), "flu.csv");
    let config = dir.path().join("run.toml");
    fs::write(&config, "profile = \"flu\"\nomega = 4\ndelta = 2\nmode = \"sliding\"\n").unwrap();
    let out_dir = dir.path().join("out");
    ok(&[
        "forecast", "--config", s(&config), "--delta", "3", "-i", s(&input), "--column", "cases", "--output-dir",
        s(&out_dir),
    ]);
    let cfg = &read_json(&out_dir.join("manifest.json"))["config"];
    assert_eq!(cfg["omega"], 4);
    assert_eq!(cfg["delta"], 3);
    assert_eq!(cfg["n_delays"], 4);
    assert_eq!(cfg["mode"], "sliding");
}

#[test]
fn warm_start_from_exported_bank() {
    let dir = TempDir::new().unwrap();
    let input = seasonal_csv(dir.path(), "flu.csv");
    let first = dir.path().join("first");
    ok(&["forecast", "--profile", "flu", "-i", s(&input), "--column", "cases", "--output-dir", s(&first), "--export-bank"]);
    let bank = first.join("bank.jsonl");
    let stored = fs::read_to_string(&bank).unwrap().lines().count();
    assert!(stored > 0);

    let second = dir.path().join("second");
    ok(&[
        "forecast", "--profile", "flu", "-i", s(&input), "--column", "cases", "--output-dir", s(&second),
        "--warm-start", s(&bank), "--export-bank",
    ]);
    let summary = read_json(&second.join("summary.json"));
    assert_eq!(summary["matches"]["bank_size"], stored);
}

#[test]
fn bad_inputs_fail_with_diagnostics() {
    let dir = TempDir::new().unwrap();
    let input = seasonal_csv(dir.path(), "flu.csv");
    let out_dir = dir.path().join("out");

    let out = ekm(&["forecast", "--omega", "0", "-i", s(&input), "--column", "cases", "--output-dir", s(&out_dir)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("omega"));

    let out = ekm(&["forecast", "-i", s(&input), "--column", "deaths", "--output-dir", s(&out_dir)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("deaths"));

    let gappy = dir.path().join("gappy.csv");
    let mut text = String::from("value\n");
    for t in 0..40 {
        if t == 20 {
            text.push_str("NA\n");
        } else {
            text.push_str(&format!("{}\n", 10.0 + (t as f64 * 0.4).sin()));
        }
    }
    fs::write(&gappy, text).unwrap();
    let out = ekm(&["forecast", "--profile", "bike", "-i", s(&gappy), "--output-dir", s(&out_dir)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing value at row 21"));
    ok(&["forecast", "--profile", "bike", "-i", s(&gappy), "--interpolate", "--output-dir", s(&out_dir)]);
}
