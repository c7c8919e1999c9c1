use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn musebench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_musebench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn aggregate(dir: &Path) -> PathBuf {
    let out = dir.join("aggregated.jsonl");
    let run = musebench(&[
        "aggregate",
        "--annotations",
        s(&fixture("annotations.jsonl")),
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    out
}

#[test]
fn aggregate_writes_records_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = aggregate(dir.path());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 72);
    let first: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert!(first["overall_score"].is_number());

    let manifest: Value = serde_json::from_slice(
        &std::fs::read(dir.path().join("aggregated.jsonl.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["tool"], "musebench");
    assert_eq!(manifest["command"], "aggregate");
    assert_eq!(manifest["inputs"][0]["name"], "annotations.jsonl");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["outputs"][0]["name"], "aggregated.jsonl");
    assert!(manifest["timestamp"].as_str().unwrap().ends_with('Z'));
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&musebench(&["--help"])), 0);
    assert_eq!(code(&musebench(&["metrics", "--help"])), 0);
}

#[test]
fn unknown_subcommand_prints_usage() {
    let out = musebench(&["frobnicate"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn missing_input_is_an_io_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = musebench(&[
        "aggregate",
        "--annotations",
        s(&dir.path().join("absent.jsonl")),
        "--out",
        s(&dir.path().join("out.jsonl")),
    ]);
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("out.jsonl").exists());
}

#[test]
fn malformed_input_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"pair_id\": 3}\n").unwrap();
    let out = musebench(&[
        "aggregate",
        "--annotations",
        s(&bad),
        "--out",
        s(&dir.path().join("o.jsonl")),
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn oversized_oracle_is_a_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = musebench(&[
        "sample",
        "--corpus",
        s(&fixture("prompts.jsonl")),
        "--n",
        "20",
        "--oracle",
        "--out",
        s(&dir.path().join("sel.json")),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn subset_larger_than_corpus_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = musebench(&[
        "sample",
        "--corpus",
        s(&fixture("prompts.jsonl")),
        "--n",
        "61",
        "--out",
        s(&dir.path().join("sel.json")),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn greedy_sample_selects_n_prompts() {
    let dir = tempfile::tempdir().unwrap();
    let sel = dir.path().join("sel.json");
    let subset = dir.path().join("subset.jsonl");
    let out = musebench(&[
        "sample",
        "--corpus",
        s(&fixture("prompts.jsonl")),
        "--n",
        "12",
        "--greedy",
        "--out",
        s(&sel),
        "--subset-out",
        s(&subset),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&std::fs::read(&sel).unwrap()).unwrap();
    assert_eq!(v["chosen"].as_array().unwrap().len(), 12);
    assert_eq!(
        std::fs::read_to_string(&subset).unwrap().lines().count(),
        12
    );
}

#[test]
fn refuses_to_overwrite_an_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("annotations.jsonl");
    std::fs::copy(fixture("annotations.jsonl"), &input).unwrap();
    let before = std::fs::read(&input).unwrap();
    let out = musebench(&["aggregate", "--annotations", s(&input), "--out", s(&input)]);
    assert_eq!(code(&out), 1);
    assert_eq!(std::fs::read(&input).unwrap(), before);
}

#[test]
fn flags_override_config_and_config_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let aggregated = aggregate(dir.path());
    let pred = dir.path().join("pred.jsonl");
    let run = musebench(&[
        "score-vqa",
        "--logits",
        s(&fixture("logits.jsonl")),
        "--out",
        s(&dir.path().join("elements.jsonl")),
        "--pred-out",
        s(&pred),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let config = dir.path().join("musebench.toml");
    std::fs::write(&config, "[report]\nformat = \"csv\"\n").unwrap();
    let pairs = fixture("pairs.jsonl");

    let rank = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec![
            "rank",
            "--config",
            s(&config),
            "--pred",
            s(&pred),
            "--pairs",
            s(&pairs),
            "--truth",
            s(&aggregated),
        ];
        args.extend_from_slice(extra);
        let out_arg = out.to_str().unwrap().to_string();
        args.extend_from_slice(&["--out", &out_arg]);
        let run = musebench(&args);
        assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
        let manifest: Value = serde_json::from_slice(
            &std::fs::read(dir.path().join(format!("{name}.manifest.json"))).unwrap(),
        )
        .unwrap();
        (std::fs::read_to_string(&out).unwrap(), manifest)
    };

    let (csv, manifest) = rank("board.csv", &[]);
    assert_eq!(manifest["config"]["format"], "csv");
    assert!(csv.starts_with("model"), "{csv}");
    let (json, manifest) = rank("board.json", &["--format", "json"]);
    assert_eq!(manifest["config"]["format"], "json");
    serde_json::from_str::<Value>(&json).unwrap();
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "[report]\nfromat = \"csv\"\n").unwrap();
    let out = musebench(&[
        "aggregate",
        "--config",
        s(&config),
        "--annotations",
        s(&fixture("annotations.jsonl")),
        "--out",
        s(&dir.path().join("o.jsonl")),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn requests_only_needs_no_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("requests.jsonl");
    let run = Command::new(env!("CARGO_BIN_EXE_musebench"))
        .args([
            "split-elements",
            "--prompts",
            s(&fixture("prompts.jsonl")),
            "--out",
            s(&out),
            "--requests-only",
        ])
        .env_clear()
        .output()
        .unwrap();
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let lines: Vec<Value> = std::fs::read_to_string(&out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 60);
    assert!(lines[0]["id"].is_string());
}
