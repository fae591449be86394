use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use adaptsig_core::model::{load_intersection_config, validate_plan, SignalPlan};
use adaptsig_core::nsga2::FrontExport;
use adaptsig_core::pipeline::{CycleLatency, LatencySummary};
use serde_json::Value;

fn asset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets").join(name)
}

fn adaptsig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adaptsig"))
        .args(args)
        .output()
        .expect("spawn adaptsig")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn optimize(out: &Path, seed: &str) -> Output {
    adaptsig(&[
        "optimize",
        "--config",
        path_str(&asset("palashi5.json")),
        "--queue",
        path_str(&asset("queue_sample.json")),
        "--seed",
        seed,
        "--out",
        path_str(out),
    ])
}

#[test]
fn optimize_writes_valid_plan_and_front() {
    let dir = tempfile::tempdir().unwrap();
    let out = optimize(dir.path(), "1");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("f1=") && stdout.contains("f2="), "{stdout}");

    let front: FrontExport =
        serde_json::from_str(&fs::read_to_string(dir.path().join("front.json")).unwrap()).unwrap();
    assert!(!front.members.is_empty());
    let plan: SignalPlan =
        serde_json::from_str(&fs::read_to_string(dir.path().join("plan.json")).unwrap()).unwrap();
    let cfg = load_intersection_config(asset("palashi5.json")).unwrap();
    validate_plan(&plan, &cfg).unwrap();

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "optimize");
    assert_eq!(manifest["seeds"][0], 1);
    assert_eq!(manifest["config"]["intersection"]["num_links"], 5);
}

#[test]
fn optimize_same_seed_gives_identical_front() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(optimize(a.path(), "7").status.success());
    assert!(optimize(b.path(), "7").status.success());
    for file in ["front.json", "plan.json"] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn optimize_rejects_malformed_queue() {
    let dir = tempfile::tempdir().unwrap();
    let queue = dir.path().join("queue.json");
    fs::write(&queue, "{\"motorized\": [1, 2,").unwrap();
    let out = adaptsig(&[
        "optimize",
        "--config",
        path_str(&asset("palashi5.json")),
        "--queue",
        path_str(&queue),
        "--out",
        path_str(&dir.path().join("out")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("failed to parse"), "{stderr}");
}

#[test]
fn optimize_rejects_queue_of_wrong_width() {
    let dir = tempfile::tempdir().unwrap();
    let queue = dir.path().join("queue.json");
    fs::write(&queue, r#"{"motorized": [1, 2], "non_motorized": [0, 0]}"#).unwrap();
    let out = adaptsig(&[
        "optimize",
        "--config",
        path_str(&asset("palashi5.json")),
        "--queue",
        path_str(&queue),
        "--out",
        path_str(&dir.path().join("out")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension mismatch"));
}

#[test]
fn bad_flag_is_a_validation_error() {
    assert_eq!(adaptsig(&["optimize", "--frobnicate"]).status.code(), Some(1));
    assert_eq!(adaptsig(&["--help"]).status.code(), Some(0));
}

#[test]
fn simulate_reports_every_link() {
    let dir = tempfile::tempdir().unwrap();
    let out = adaptsig(&[
        "simulate",
        "--scenario",
        path_str(&asset("scenario_asymmetric.json")),
        "--out",
        path_str(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    let names = ["Fuller Road", "Bakshibazar", "Azimpur", "Nilkhet", "Dhakeshwari"];
    for section in report.split("controller ").skip(1) {
        let rows = section
            .lines()
            .filter(|l| names.iter().any(|n| l.starts_with(n)))
            .count();
        assert_eq!(rows, 5, "{section}");
    }
    let metrics: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    for c in metrics["controllers"].as_array().unwrap() {
        assert_eq!(c["metrics"]["avg_waiting_per_link"].as_array().unwrap().len(), 5);
    }
    assert!(dir.path().join("timeseries_adaptive.csv").exists());
}

#[test]
fn simulate_rejects_zero_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let mut scenario: Value =
        serde_json::from_str(&fs::read_to_string(asset("scenario_asymmetric.json")).unwrap()).unwrap();
    scenario["horizon_s"] = 0.into();
    scenario["intersection"] = path_str(&asset("palashi5.json")).into();
    let path = dir.path().join("scenario.json");
    fs::write(&path, scenario.to_string()).unwrap();
    let out = adaptsig(&["simulate", "--scenario", path_str(&path), "--out", path_str(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizon"));
}

#[test]
fn simulate_same_seed_gives_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = adaptsig(&[
            "simulate",
            "--scenario",
            path_str(&asset("scenario_asymmetric.json")),
            "--seed",
            "4",
            "--out",
            path_str(dir.path()),
        ]);
        assert!(out.status.success());
    }
    for file in ["timeseries_adaptive.csv", "timeseries_fixed_equal.csv", "metrics.json"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap());
    }
}

fn read_ledger(dir: &Path) -> Vec<CycleLatency> {
    fs::read_to_string(dir.join("latency.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// JSON text round-trips floats to within an ulp or so.
fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[test]
fn pipeline_three_cycles_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = adaptsig(&[
        "pipeline",
        "--config",
        path_str(&asset("pipeline_quick.json")),
        "--cycles",
        "3",
        "--report",
        "--out",
        path_str(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ledger = read_ledger(dir.path());
    assert_eq!(ledger.len(), 3);
    for c in &ledger {
        let ext = mean(&c.extraction_samples_ms);
        let inf = mean(&c.inference_samples_ms);
        assert!(close(c.t_extraction_ms, ext));
        assert!(close(c.t_inference_ms, inf));
        assert!(close(c.t_latency_ms, ext + inf + c.optimization_ms));
    }
    let plans = fs::read_to_string(dir.path().join("plans.jsonl")).unwrap();
    assert_eq!(plans.lines().count(), 3);

    let summary: LatencySummary =
        serde_json::from_str(&fs::read_to_string(dir.path().join("latency_summary.json")).unwrap())
            .unwrap();
    let per_cycle: Vec<f64> = ledger.iter().map(|c| c.t_latency_ms).collect();
    assert!(close(summary.t_latency_ms, mean(&per_cycle)));
    assert_eq!(summary.cycles, 3);
    let table = fs::read_to_string(dir.path().join("latency_report.txt")).unwrap();
    assert!(table.contains("cycles: 3"));
}

#[test]
fn pipeline_two_second_detector_three_cycles() {
    let dir = tempfile::tempdir().unwrap();
    let out = adaptsig(&[
        "pipeline",
        "--config",
        path_str(&asset("pipeline_synthetic.json")),
        "--cycles",
        "3",
        "--out",
        path_str(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ledger = read_ledger(dir.path());
    assert_eq!(ledger.len(), 3);
    for c in &ledger {
        assert!(c.inference_samples_ms.iter().all(|&ms| ms >= 1994.8));
        assert!(close(
            c.t_latency_ms,
            mean(&c.extraction_samples_ms) + mean(&c.inference_samples_ms) + c.optimization_ms
        ));
    }
}

#[test]
fn pipeline_replays_detection_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = adaptsig(&[
        "pipeline",
        "--config",
        path_str(&asset("pipeline_replay.json")),
        "--cycles",
        "2",
        "--out",
        path_str(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_ledger(dir.path()).len(), 2);
}

#[test]
fn pipeline_with_empty_replay_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = adaptsig(&[
        "pipeline",
        "--config",
        path_str(&asset("pipeline_replay_empty.json")),
        "--cycles",
        "3",
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sources"));
}

#[test]
fn pipeline_rejects_missing_replay_log() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec: Value =
        serde_json::from_str(&fs::read_to_string(asset("pipeline_replay.json")).unwrap()).unwrap();
    spec["intersection"] = path_str(&asset("palashi5.json")).into();
    for cam in spec["cameras"].as_array_mut().unwrap() {
        cam["source"]["path"] = "nowhere.jsonl".into();
    }
    let path = dir.path().join("p.json");
    fs::write(&path, spec.to_string()).unwrap();
    let out = adaptsig(&["pipeline", "--config", path_str(&path), "--out", path_str(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
}
