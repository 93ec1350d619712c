use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn deca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deca")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = deca(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn blobs_config() -> Value {
    json!({
        "task": "multi-class",
        "dataset": {"blobs": {"num_classes": 3, "per_class": 40, "dim": 2, "spread": 3.0, "noise_ratio": 0.2, "seed": 7}},
        "model": {"kind": "mlp-classifier", "input_dim": 2, "hidden": [8], "num_classes": 3, "init_scale": 0.1},
        "trainer": "normal",
        "deca": {"learn_rate": 0.01, "epochs": 8, "batch_size": 32},
        "seeds": [1, 2, 3]
    })
}

fn planted_config() -> Value {
    json!({
        "task": "binary-ranking",
        "dataset": {"planted": {"num_users": 30, "num_items": 20, "latent_dim": 4, "noise_pos": 0.3, "seed": 3}},
        "split": {"mode": "random", "ratios": [0.6, 0.2, 0.2], "clean_rule": "hidden-truth"},
        "model": {"kind": "mf", "num_users": 30, "num_items": 20, "latent_dim": 4, "init_scale": 0.1},
        "trainer": "deca-p",
        "deca": {"learn_rate": 0.01, "epochs": 6, "batch_size": 64},
        "ks": [5],
        "seeds": [1, 2]
    })
}

fn write(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(value).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn reports(dir: &Path) -> Vec<Value> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir.join("runs"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()).collect()
}

#[test]
fn three_seeds_give_three_reports_and_reruns_match() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", &blobs_config());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["train", "--config", s(&cfg), "--out", s(&a)]);
    ok(&["train", "--config", s(&cfg), "--out", s(&b), "--workers", "1"]);
    let seeds: Vec<u64> = reports(&a).iter().map(|r| r["seeds"][0].as_u64().unwrap()).collect();
    assert_eq!(seeds, vec![1, 2, 3]);
    for name in ["metrics.csv", "plot.csv", "runs/c000-normal-s2.epochs.csv", "runs/c000-normal-s2.metrics.csv"] {
        let (x, y) = (std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
        assert_eq!(x, y, "{name}");
    }
    let epochs = std::fs::read_to_string(a.join("runs/c000-normal-s1.epochs.csv")).unwrap();
    assert!(epochs.starts_with("epoch,split,metric,value\n0,train,loss,"), "{epochs}");
    let metrics = std::fs::read_to_string(a.join("runs/c000-normal-s1.metrics.csv")).unwrap();
    assert!(metrics.starts_with("metric,K,split,value\naccuracy,,valid,"), "{metrics}");
}

#[test]
fn seed_override_replaces_the_seed_list() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", &blobs_config());
    let out = tmp.path().join("o");
    ok(&["train", "--config", s(&cfg), "--out", s(&out), "--seed-override", "42"]);
    let r = reports(&out);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0]["seeds"][0], 42);
}

#[test]
fn sweep_then_compare() {
    let tmp = tempfile::tempdir().unwrap();
    let mut raw = blobs_config();
    raw["trainer"] = json!(["normal", "deca-p", "itlm"]);
    raw["seeds"] = json!([1, 2]);
    let cfg = write(tmp.path(), "c.json", &raw);
    let out = tmp.path().join("o");

    let train = deca(&["train", "--config", s(&cfg), "--out", s(&out)]);
    assert!(!train.status.success(), "train rejects grids");

    ok(&["sweep", "--config", s(&cfg), "--out", s(&out), "--workers", "2"]);
    assert_eq!(reports(&out).len(), 6);
    let plot = std::fs::read_to_string(out.join("plot.csv")).unwrap();
    assert!(plot.starts_with("x,series,y\n"));
    assert_eq!(plot.lines().count(), 4, "{plot}");

    let cmp_dir = tmp.path().join("cmp");
    let text = ok(&["compare", s(&out), "--baseline", "normal", "--challenger", "deca-p", "--out", s(&cmp_dir)]);
    assert!(text.contains("accuracy"), "{text}");
    let csv = std::fs::read_to_string(cmp_dir.join("comparison.csv")).unwrap();
    assert!(csv.starts_with("metric,K,split,baseline,challenger,delta,winner\n"), "{csv}");
}

#[test]
fn compare_rejects_mismatched_datasets_and_unknown_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = write(tmp.path(), "a.json", &blobs_config());
    ok(&["train", "--config", s(&cfg), "--out", s(&a), "--seed-override", "1"]);
    let mut other = blobs_config();
    other["trainer"] = json!("deca-p");
    other["dataset"]["blobs"]["seed"] = json!(8);
    let cfg = write(tmp.path(), "b.json", &other);
    ok(&["train", "--config", s(&cfg), "--out", s(&b), "--seed-override", "1"]);
    let out = deca(&["compare", s(&a), s(&b)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("different datasets"));

    let report = a.join("runs/c000-normal-s1.json");
    let text = std::fs::read_to_string(&report).unwrap().replace("\"1.0\"", "\"2.0\"");
    std::fs::write(&report, text).unwrap();
    let out = deca(&["compare", s(&report), s(&b)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema version"));
}

#[test]
fn invalid_config_fails_before_training() {
    let tmp = tempfile::tempdir().unwrap();
    let mut raw = blobs_config();
    raw["trainer"] = json!("tce");
    let cfg = write(tmp.path(), "c.json", &raw);
    let out_dir = tmp.path().join("o");
    let out = deca(&["train", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert!(!out.status.success());
    assert!(!out_dir.exists());

    let missing = deca(&["train", "--config", s(&tmp.path().join("nope.json"))]);
    assert!(!missing.status.success());
}

#[test]
fn gen_data_writes_datasets() {
    let tmp = tempfile::tempdir().unwrap();
    let mut raw = planted_config();
    raw["resample_data"] = json!(true);
    let cfg = write(tmp.path(), "c.json", &raw);
    let out = tmp.path().join("d");
    let text = ok(&["gen-data", "--config", s(&cfg), "--out", s(&out)]);
    assert!(text.contains("interactions"), "{text}");
    for seed in [1, 2] {
        let data: Value = serde_json::from_str(&std::fs::read_to_string(out.join(format!("dataset-s{seed}.json"))).unwrap()).unwrap();
        assert_eq!(data["meta"]["num_users"], 30);
    }

    // The written file can be trained on directly.
    let mut from_file = planted_config();
    from_file["dataset"] = json!({"implicit-file": {"path": out.join("dataset-s1.json")}});
    from_file["trainer"] = json!("normal");
    let cfg = write(tmp.path(), "f.json", &from_file);
    ok(&["train", "--config", s(&cfg), "--out", s(&tmp.path().join("t")), "--seed-override", "1"]);
}

#[test]
fn diagnostic_studies_write_plot_data() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", &planted_config());
    let out = tmp.path().join("r");
    let text = ok(&["rating-study", "--config", s(&cfg), "--out", s(&out)]);
    assert!(text.contains("spearman"), "{text}");
    let runs: Value = serde_json::from_str(&std::fs::read_to_string(out.join("rating_study.json")).unwrap()).unwrap();
    assert_eq!(runs.as_array().unwrap().len(), 2);
    assert!(std::fs::read_to_string(out.join("plot.csv")).unwrap().starts_with("x,series,y\n1,seed 1,"));

    let mut raw = planted_config();
    raw["trainer"] = json!("normal");
    let cfg = write(tmp.path(), "n.json", &raw);
    let d = tmp.path().join("d");
    let text = ok(&["diagnose-disagreement", "--config", s(&cfg), "--out", s(&d)]);
    assert!(text.contains("noisy above clean in"), "{text}");
    let study: Value = serde_json::from_str(&std::fs::read_to_string(d.join("disagreement.json")).unwrap()).unwrap();
    assert_eq!(study["runs"].as_array().unwrap().len(), 2);

    let bad = deca(&["rating-study", "--config", s(&cfg), "--out", s(&d)]);
    assert!(!bad.status.success(), "rating study needs a channel-learning trainer");

    let mut multi = blobs_config();
    multi["seeds"] = json!([1]);
    let cfg = write(tmp.path(), "m.json", &multi);
    ok(&["diagnose-disagreement", "--config", s(&cfg), "--out", s(&tmp.path().join("m"))]);
}
