use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nanoguard::harness::{ExperimentPlan, Manifest};
use nanoguard::info::MetricOrder;
use nanoguard::ml::{Algorithm, FeatureKind};
use nanoguard::sim::GridRange;

fn nanoguard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nanoguard"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).expect("stderr is one JSON object")
}

fn tiny_plan(path: &Path) {
    let plan = ExperimentPlan {
        legit: GridRange::new(30, 90, 60).unwrap(),
        malicious: GridRange::new(0, 400, 400).unwrap(),
        seeds: (0..6).collect(),
        sampling_periods: vec![10],
        orders: vec![MetricOrder::new(2.0).unwrap()],
        features: vec![FeatureKind::Sum],
        classifiers: vec![Algorithm::LogisticRegression],
        folds: 3,
        ..ExperimentPlan::desk()
    };
    fs::write(path, serde_json::to_string_pretty(&plan).unwrap()).unwrap();
}

#[test]
fn simulate_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sim");
    let out = nanoguard(&[
        "simulate",
        "--legit",
        "150",
        "--malicious",
        "0",
        "--seed",
        "7",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "bin_index,time_s,arrivals");
    assert_eq!(csv.lines().count(), 721);
    let record: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("trace.json")).unwrap()).unwrap();
    assert_eq!(record["config"]["rng_seed"], 7);
    assert_eq!(record["summary"]["retrieved_fraction"], 1.0);
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.command, "simulate");
    assert_eq!(manifest.files.len(), 2);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = nanoguard(&["simulate", "--legit", "1", "--malicious", "0", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_scenario_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = nanoguard(&[
        "simulate",
        "--legit",
        "10",
        "--malicious",
        "0",
        "--period",
        "7",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{ \"legit\": [10, 20").unwrap();
    let out = nanoguard(&["--config", cfg.to_str().unwrap(), "sweep"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "usage");
    assert!(err["message"].as_str().unwrap().contains("bad.json"));
}

#[test]
fn missing_dataset_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = nanoguard(&[
        "--out",
        dir.path().to_str().unwrap(),
        "train",
        "--dataset",
        "/nonexistent/data.csv",
        "--classifier",
        "logistic-regression",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "runtime");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("plan.json");
    tiny_plan(&cfg);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, jobs) in [(&a, "1"), (&b, "3")] {
        let res = nanoguard(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", jobs, "metrics"]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    for f in ["manifest.json", "plan.json", "sweep/surface.csv", "metrics/surface.csv"] {
        let read = |d: &Path| fs::read_to_string(d.join(f)).unwrap();
        assert_eq!(read(&a), read(&b), "{f}");
    }
}

#[test]
fn dataset_train_evaluate_chain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("plan.json");
    tiny_plan(&cfg);
    let cfg = cfg.to_str().unwrap();
    let data_dir = dir.path().join("data");
    let res = nanoguard(&["--config", cfg, "--out", data_dir.to_str().unwrap(), "dataset", "--feature", "sum", "--period", "10"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let dataset = String::from_utf8(res.stdout).unwrap().trim().to_string();
    assert!(Path::new(&dataset).exists());

    let model_dir = dir.path().join("model");
    let res = nanoguard(&[
        "--config",
        cfg,
        "--out",
        model_dir.to_str().unwrap(),
        "train",
        "--dataset",
        &dataset,
        "--classifier",
        "logistic-regression",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let model = String::from_utf8(res.stdout).unwrap().trim().to_string();

    let eval_dir = dir.path().join("eval");
    let res = nanoguard(&[
        "--out",
        eval_dir.to_str().unwrap(),
        "evaluate",
        "--model",
        &model,
        "--dataset",
        &dataset,
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8(res.stdout).unwrap().starts_with("auroc="));
    assert_eq!(first_line(&eval_dir.join("roc.csv")), "fpr,tpr");
    assert_eq!(first_line(&eval_dir.join("pr.csv")), "recall,precision");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(eval_dir.join("report.json")).unwrap()).unwrap();
    assert!(report["auroc"].is_number());
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}
