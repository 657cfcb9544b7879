use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMOKE: &str = r#"{
  "iterations": 5,
  "episode_length": 10,
  "seeds": [0],
  "eval_episodes": 5,
  "ppo": {"hidden": 16, "minibatch_size": 5, "epochs": 2},
  "wm": {"n_h": 8, "n_z": 4, "hidden": 16, "seq_len": 3, "batch_sequences": 4}
}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_compact-mec"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn smoke_config(dir: &Path) -> PathBuf {
    let p = dir.join("smoke.json");
    fs::write(&p, SMOKE).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn jsonl(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn smoke_train_writes_five_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path());
    let out = dir.path().join("run");
    let o = run(&["train", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = jsonl(&out.join("metrics-seed-0.jsonl"));
    assert_eq!(rows.len(), 5);
    let hash = rows[0]["config_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r["iteration"], i + 1);
        assert_eq!(r["seed"], 0);
        assert_eq!(r["config_hash"], hash.as_str());
    }
    for f in ["config.json", "summary.csv", "evaluation.json", "checkpoint-seed-0.json"] {
        let text = fs::read_to_string(out.join(f)).unwrap();
        assert!(text.contains(&hash), "{f} lacks the config hash");
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.lines().next().unwrap().starts_with("config_hash,seed,"));
}

#[test]
fn resumed_run_continues_numbering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path());
    let out = dir.path().join("run");
    assert!(run(&["train", "--config", s(&cfg), "--out", s(&out), "--iterations", "3"]).status.success());
    let o = run(&["train", "--config", s(&cfg), "--out", s(&out), "--resume"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let iters: Vec<u64> = jsonl(&out.join("metrics-seed-0.jsonl"))
        .iter()
        .map(|r| r["iteration"].as_u64().unwrap())
        .collect();
    assert_eq!(iters, vec![1, 2, 3, 4, 5]);

    let straight = dir.path().join("straight");
    assert!(run(&["train", "--config", s(&cfg), "--out", s(&straight)]).status.success());
    assert_eq!(
        fs::read(out.join("metrics-seed-0.jsonl")).unwrap(),
        fs::read(straight.join("metrics-seed-0.jsonl")).unwrap()
    );
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path());
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for out in [&a, &b] {
        assert!(run(&["train", "--config", s(&cfg), "--out", s(out), "--seed", "7"]).status.success());
    }
    assert!(run(&["train", "--config", s(&cfg), "--out", s(&c), "--seed", "8"]).status.success());
    for f in ["metrics-seed-7.jsonl", "summary.csv", "evaluation.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_ne!(
        fs::read(a.join("summary.csv")).unwrap(),
        fs::read(c.join("summary.csv")).unwrap()
    );
}

#[test]
fn missing_config_yields_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run(&["train", "--config", s(&dir.path().join("nope.json")), "--out", s(&out)]);
    assert!(!o.status.success());
    let record: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(record["status"], "error");
    assert_eq!(record["command"], "train");
    let saved: Value = serde_json::from_str(&fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
    assert_eq!(saved, record);
}

#[test]
fn invalid_config_and_flags_fail() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"iterations": 5, "unknown_field": 1}"#).unwrap();
    let o = run(&["train", "--config", s(&bad), "--out", s(&dir.path().join("o"))]);
    assert!(!o.status.success());
    assert_eq!(serde_json::from_slice::<Value>(&o.stderr).unwrap()["kind"], "json");

    let o = run(&["train", "--out", s(dir.path()), "--baseline", "bogus"]);
    assert!(!o.status.success());
    assert_eq!(serde_json::from_slice::<Value>(&o.stderr).unwrap()["kind"], "usage");
}

#[test]
fn compress_report_has_four_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ecld.json");
    fs::write(&cfg, r#"{"train_samples": 256, "test_samples": 256, "teacher_steps": 150, "distill_steps": 60}"#)
        .unwrap();
    let out = dir.path().join("c");
    let o = run(&[
        "compress",
        "--config",
        s(&cfg),
        "--out",
        s(&out),
        "--qa",
        s(&fixture("qa.jsonl")),
        "--hallucination",
        s(&fixture("hallucination.jsonl")),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&fs::read_to_string(out.join("compress_report.json")).unwrap()).unwrap();
    for field in ["hallucination", "accuracy", "accessibility_mb", "energy_estimate"] {
        assert!(r["summary"][field].is_f64(), "missing {field}");
    }
    assert_eq!(r["summary"]["corpus_accuracy"], 0.7);
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(r["seed"], 0);
}

#[test]
fn compare_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path());
    let out = dir.path().join("cmp");
    let o = run(&["compare", "--config", s(&cfg), "--out", s(&out), "--k", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv_rows(&out.join("compare_by_k.csv"));
    let header = rdr.remove(0);
    assert!(header.contains(&"latency_mean".to_string()));
    assert_eq!(rdr.len(), 4);
    let acc = header.iter().position(|h| h == "accuracy_mean").unwrap();
    let pol = header.iter().position(|h| h == "policy").unwrap();
    let get = |name: &str| -> f64 { rdr.iter().find(|r| r[pol] == name).unwrap()[acc].parse().unwrap() };
    assert!(get("always-offload") >= get("always-local"));
    for f in ["compare.csv", "compare_episodes.csv", "config.json"] {
        assert!(out.join(f).is_file());
    }
    let again = dir.path().join("cmp2");
    assert!(run(&["compare", "--config", s(&cfg), "--out", s(&again), "--k", "2"]).status.success());
    for f in ["compare.csv", "compare_by_k.csv", "compare_episodes.csv"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(again.join(f)).unwrap());
    }
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn env_check_and_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e");
    assert!(run(&["env-check", "--out", s(&out), "--steps", "200", "--seed", "4"]).status.success());
    let r: Value = serde_json::from_str(&fs::read_to_string(out.join("env_check.json")).unwrap()).unwrap();
    assert_eq!(r["seed"], 4);
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));

    let out = dir.path().join("p");
    let o = run(&["profile-catalog", "--out", s(&out), "--config", s(&fixture("profiles.json"))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&fs::read_to_string(out.join("profiles.json")).unwrap()).unwrap();
    assert!(r["profiles"]["ecld"]["storage_mb"].is_f64());
}

#[test]
fn evaluate_reads_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path());
    let run_dir = dir.path().join("run");
    assert!(run(&["train", "--config", s(&cfg), "--out", s(&run_dir)]).status.success());
    let out = dir.path().join("ev");
    let ckpt = run_dir.join("checkpoint-seed-0.json");
    let o = run(&["evaluate", "--checkpoint", s(&ckpt), "--out", s(&out), "--episodes", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&fs::read_to_string(out.join("evaluation.json")).unwrap()).unwrap();
    assert_eq!(r["report"]["episodes"], 3);
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
}
