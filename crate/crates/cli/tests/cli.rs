//! End-to-end runs of the `swati` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn swati(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swati")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = swati(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn error_json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(1));
    let line = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(line.lines().last().unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small generated corpus in `dir/gen`.
fn corpus(dir: &Path) -> PathBuf {
    let gen = dir.join("gen");
    ok(&["gen", "--seed", "11", "--volunteers", "20", "--tasks", "15", "--out", s(&gen)]);
    gen.join("corpus.jsonl")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn gen_writes_corpus_stats_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let c = corpus(tmp.path());
    let gen = c.parent().unwrap();
    let stats: Value = serde_json::from_str(&std::fs::read_to_string(gen.join("corpus_stats.json")).unwrap()).unwrap();
    assert_eq!(stats["n_volunteers"], 20);
    assert_eq!(stats["n_tasks"], 15);
    let m = manifest(gen);
    assert_eq!(m["command"], "gen");
    assert_eq!(m["seeds"]["synthetic"], 11);
    assert!(m["outputs"]["corpus.jsonl"].is_string());
}

#[test]
fn gen_without_seed_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let err = error_json(&swati(&["gen", "--out", s(tmp.path())]));
    assert_eq!(err["error"], "seed");
}

#[test]
fn extract_reports_stats() {
    let tmp = tempfile::tempdir().unwrap();
    let c = corpus(tmp.path());
    let out = tmp.path().join("ex");
    ok(&["extract", "--corpus", s(&c), "--out", s(&out)]);
    let stats: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("extraction_stats.json")).unwrap()).unwrap();
    assert_eq!(stats["volunteers"]["avg_per_doc"], 12);
    assert_eq!(stats["volunteers"]["unresolved_mentions"], 0);
    let lines = std::fs::read_to_string(out.join("extraction.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 35);
    assert!(manifest(&out)["inputs"][s(&c)].is_string());
}

#[test]
fn match_outputs_and_epochs() {
    let tmp = tempfile::tempdir().unwrap();
    let c = corpus(tmp.path());
    let out = tmp.path().join("m");
    let stdout = ok(&["match", "--corpus", s(&c), "--epochs", "3", "--out", s(&out)]).stdout;
    let q: Value = serde_json::from_slice(&stdout).unwrap();
    assert_eq!(q["method"], "swati");
    assert_eq!(q["coverage"], 1.0);
    for f in ["assignments.jsonl", "quality.csv", "cdf.csv", "ledger.bin", "ledger.jsonl", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    // Every task is assigned in the first epoch, so later epochs add nothing.
    let ledger = std::fs::read_to_string(out.join("ledger.jsonl")).unwrap();
    assert_eq!(ledger.lines().count(), 30);
    let verdict: Value = serde_json::from_slice(&ok(&["verify", s(&out.join("ledger.bin"))]).stdout).unwrap();
    assert_eq!(verdict, serde_json::json!({"status": "ok", "records": 30}));
    let m = manifest(&out);
    assert_eq!(m["args"]["method"], "swati");
    assert_eq!(m["args"]["ledger_head"].as_str().unwrap().len(), 64);
}

#[test]
fn random_needs_seed_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let c = corpus(tmp.path());
    let err = error_json(&swati(&["match", "--corpus", s(&c), "--method", "random", "--out", s(tmp.path())]));
    assert_eq!(err["error"], "seed");

    let run = |name: &str| {
        let out = tmp.path().join(name);
        ok(&["match", "--corpus", s(&c), "--method", "random", "--seed", "5", "--out", s(&out)]);
        std::fs::read(out.join("assignments.jsonl")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn tampered_ledger_fails_verification() {
    let tmp = tempfile::tempdir().unwrap();
    let c = corpus(tmp.path());
    let out = tmp.path().join("m");
    ok(&["match", "--corpus", s(&c), "--out", s(&out)]);
    let path = out.join("ledger.bin");
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0xff;
    std::fs::write(&path, bytes).unwrap();

    let res = swati(&["verify", s(&path)]);
    assert_eq!(res.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(v["status"], "tampered");
    assert_eq!(v["first_bad_index"], 29);
    assert_eq!(v["reason"], "hash_mismatch");

    let err = error_json(&swati(&["verify", s(&tmp.path().join("missing.bin"))]));
    assert_eq!(err["error"], "ledger");
}

#[test]
fn config_file_switches_utility_form() {
    let tmp = tempfile::tempdir().unwrap();
    let c = corpus(tmp.path());
    let cfg = tmp.path().join("engine.toml");
    std::fs::write(&cfg, "[utility]\nalpha = 0.5\nbeta = 0.5\nform = \"split\"\n").unwrap();
    let product = tmp.path().join("p");
    let split = tmp.path().join("s");
    ok(&["match", "--corpus", s(&c), "--out", s(&product)]);
    ok(&["match", "--corpus", s(&c), "--config", s(&cfg), "--out", s(&split)]);
    let m = manifest(&split);
    assert_eq!(m["config"]["utility"]["form"], "split");
    assert!(m["inputs"][s(&cfg)].is_string());
    assert_ne!(manifest(&product)["config_sha256"], m["config_sha256"]);
}

#[test]
fn bad_inputs_are_reported_as_json() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[utility]\nalpha = 0.9\nbeta = 0.9\n").unwrap();
    let err = error_json(&swati(&["gen", "--seed", "1", "--config", s(&cfg), "--out", s(tmp.path())]));
    assert_eq!(err["error"], "config");

    let c = tmp.path().join("c.jsonl");
    std::fs::write(&c, "{\"id\":\"v1\",\"kind\":\"volunteer\",\"text\":\"x\",\"extra\":1}\n").unwrap();
    let err = error_json(&swati(&["extract", "--corpus", s(&c), "--strict", "--out", s(tmp.path())]));
    assert_eq!(err["error"], "corpus");
    ok(&["extract", "--corpus", s(&c), "--out", s(&tmp.path().join("lenient"))]);
}

#[test]
fn bench_writes_timing_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("b");
    ok(&["bench", "--sizes", "10,20", "--seed", "2", "--reps", "3", "--out", s(&out)]);
    let timing = std::fs::read_to_string(out.join("timing.csv")).unwrap();
    let mut lines = timing.lines();
    assert_eq!(lines.next(), Some("size,method,stage,rep,seconds"));
    assert!(lines.count() > 2 * 3 * 3);
    let quality = std::fs::read_to_string(out.join("quality.csv")).unwrap();
    assert_eq!(quality.lines().count(), 4);
}
