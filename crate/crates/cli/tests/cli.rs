use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn rfdi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfdi"))
        .args(args)
        .env("RFDI_THREADS", "2")
        .output()
        .expect("spawn rfdi")
}

fn simulate(dir: &Path, seed: u64) -> PathBuf {
    let path = dir.join(format!("sim{seed}.csv"));
    let out = rfdi(&["simulate", "--out", path.to_str().unwrap(), "--n", "2500", "--seed", &seed.to_string()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn strip_timestamp(mut v: Value) -> Value {
    v["config"].as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn simulate_without_out_is_a_usage_error() {
    let out = rfdi(&["simulate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_data_file_exits_one() {
    let out = rfdi(&["evaluate", "--data", "/nonexistent/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn select_report_has_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), 1);
    for model in ["brf", "rf"] {
        let report = dir.path().join(format!("{model}.json"));
        let plot = dir.path().join(format!("{model}.csv"));
        let out = rfdi(&[
            "select", "--data", data.to_str().unwrap(), "--model", model, "--trees", "20", "--runs", "2",
            "--out", report.to_str().unwrap(), "--csv", plot.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let text = std::fs::read_to_string(&report).unwrap();
        let keys = ["config", "dataset_stats", "thresholds", "variables", "selected", "metrics", "runs"];
        let positions: Vec<usize> = keys.iter().map(|k| text.find(&format!("\n  \"{k}\":")).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "top-level keys out of order");
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v.as_object().unwrap().len(), keys.len());
        assert!(v["config"]["timestamp"].is_u64());
        assert_eq!(v["config"]["model"], model);
        assert_eq!(v["dataset_stats"]["p"], 45);
        assert_eq!(v["variables"].as_array().unwrap().len(), 45);
        assert_eq!(v["runs"].as_array().unwrap().len(), 2);
        let std_t = v["thresholds"]["standard"]["mean"].as_f64().unwrap();
        let adj_t = v["thresholds"]["adjusted"]["mean"].as_f64().unwrap();
        assert!(adj_t < std_t);
        for k in ["tp", "fp", "tn", "fn"] {
            assert!(v["metrics"]["confusion"][k].is_u64());
        }

        let mut rdr = csv::Reader::from_path(&plot).unwrap();
        let header: Vec<String> = rdr.headers().unwrap().iter().map(str::to_owned).collect();
        assert_eq!(
            header,
            ["run", "variable", "mean_depth", "threshold_standard", "threshold_adjusted", "selected_standard", "selected_adjusted"]
        );
        assert_eq!(rdr.records().count(), 2 * 45);
    }
}

#[test]
fn reports_are_deterministic_apart_from_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), 2);
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = rfdi(&["evaluate", "--data", data.to_str().unwrap(), "--trees", "25", "--seed", "9", "--out", path.to_str().unwrap()]);
        assert!(out.status.success());
        strip_timestamp(json(&path))
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn rfq_rule_recovers_more_minority_than_half_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), 4);
    let path = dir.path().join("eval.json");
    let out = rfdi(&["evaluate", "--data", data.to_str().unwrap(), "--trees", "50", "--holdout", "0.3", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let v = json(&path);
    assert_eq!(v["evaluation"], "holdout");
    let tpr = |rule: &str| v["rules"][rule]["metrics"]["tpr"].as_f64().unwrap();
    assert!(tpr("rfq") >= tpr("threshold_half"));
    assert_eq!(v["metrics"], v["rules"]["rfq"]);
}

#[test]
fn separable_data_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sep.csv");
    let mut text = String::from("a,b,y\n");
    for i in 0..120 {
        let label = if i % 6 == 0 { "pos" } else { "neg" };
        let a = if label == "pos" { 10.0 + i as f64 } else { i as f64 / 100.0 };
        text.push_str(&format!("{a},{},{label}\n", i % 7));
    }
    std::fs::write(&path, text).unwrap();
    let report = dir.path().join("r.json");
    let out = rfdi(&["evaluate", "--data", path.to_str().unwrap(), "--trees", "30", "--out", report.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&report);
    assert_eq!(v["config"]["minority_label"], "pos");
    assert_eq!(v["metrics"]["metrics"]["gmean"].as_f64(), Some(1.0));
}

#[test]
fn infeasible_holdout_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.csv");
    std::fs::write(&path, "a,y\n1,x\n2,x\n3,x\n4,z\n").unwrap();
    let out = rfdi(&["evaluate", "--data", path.to_str().unwrap(), "--holdout", "0.5"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}
