use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const FIXTURE_URL: &str = "https://www.booking.com/hotel/gr/aegean-breeze-suites.html";

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run(work: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_review-insight"))
        .arg("--cache-dir")
        .arg(work.join("cache"))
        .arg("--fixtures-dir")
        .arg(fixtures_dir())
        .arg("--results-dir")
        .arg(work.join("results"))
        .args(args)
        .env_remove("REVIEW_INSIGHT_CONFIG")
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("{}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn summarize_with_the_mock_model() {
    let work = tempfile::tempdir().unwrap();
    let out = run(work.path(), &["summarize", FIXTURE_URL, "--model", "mock"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("mock kind=summary"), "{text}");
    assert!(text.contains("language=en"));
    // deterministic across processes, and the corpus now comes from the cache
    let again = run(work.path(), &["summarize", FIXTURE_URL, "--model", "mock"]);
    assert_eq!(stdout(&again), text);

    let json = run(work.path(), &["summarize", FIXTURE_URL, "--model", "mock", "--lang", "el", "--json"]);
    let doc: Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(doc["language"], "el");
    assert_eq!(doc["insufficient_evidence"], false);
}

#[test]
fn ask_rejects_an_empty_question() {
    let work = tempfile::tempdir().unwrap();
    let out = run(work.path(), &["ask", FIXTURE_URL, ""]);
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["error"], "EmptyQuestion");

    let ok = run(work.path(), &["ask", FIXTURE_URL, "Is parking free?", "--model", "mock", "--json"]);
    assert!(ok.status.success());
    let doc: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(doc["kind"], "answer");
    assert_eq!(doc["insufficient_evidence"], false);
}

#[test]
fn errors_are_machine_readable() {
    let work = tempfile::tempdir().unwrap();
    let out = run(work.path(), &["fetch", "not a url"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "MalformedUrl");
    let out = run(work.path(), &["summarize", FIXTURE_URL, "--model", "gpt-5"]);
    assert_eq!(stderr_json(&out)["error"], "UnknownModel");
}

#[test]
fn fetch_reports_metrics_then_uses_the_cache() {
    let work = tempfile::tempdir().unwrap();
    let out = run(work.path(), &["fetch", FIXTURE_URL, "--provider", "arel"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["reviews"], 200);
    assert_eq!(doc["from_cache"], false);
    assert_eq!(doc["metrics"]["monetary_cost"], "0.30");
    assert!(work.path().join("cache/238eae49005694f0.corpus").exists());
    let again: Value = serde_json::from_slice(&run(work.path(), &["fetch", FIXTURE_URL]).stdout).unwrap();
    assert_eq!(again["from_cache"], true);
}

#[test]
fn bench_writes_the_golden_report() {
    let work = tempfile::tempdir().unwrap();
    let out = run(work.path(), &["bench"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let path = PathBuf::from(doc["report"].as_str().unwrap());
    let name = path.file_name().unwrap().to_str().unwrap();
    assert!(name.starts_with("llm-bench-") && name.ends_with(".md"), "{name}");
    assert_eq!(path.parent().unwrap(), work.path().join("results"));
    let golden = std::fs::read_to_string(fixtures_dir().join("golden/llm_bench.md")).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), golden);

    let out = run(work.path(), &["bench", "--retrieval"]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let report = std::fs::read_to_string(doc["report"].as_str().unwrap()).unwrap();
    assert!(report.contains("| Retrieval Time (200 reviews) | 25.00 s | 35.00 s | 5.00 s |"), "{report}");
}

#[test]
fn models_lists_the_registry() {
    let work = tempfile::tempdir().unwrap();
    let out = run(work.path(), &["models", "--json"]);
    let rows: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    // eight seeded models plus the offline mock
    assert_eq!(rows.len(), 9);
    let text = stdout(&run(work.path(), &["models"]));
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().any(|l| l.starts_with("llama-3.2-3b") && l.ends_with("no")));
}

#[test]
fn config_file_and_environment_layers() {
    let work = tempfile::tempdir().unwrap();
    let config = work.path().join("service.toml");
    std::fs::write(&config, "default_model = \"mock\"\ndefault_language = \"fr\"\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_review-insight"))
        .args(["--config", config.to_str().unwrap(), "--cache-dir"])
        .arg(work.path().join("cache"))
        .arg("--fixtures-dir")
        .arg(fixtures_dir())
        .args(["summarize", FIXTURE_URL, "--json"])
        .env("REVIEW_INSIGHT_DEFAULT_LANGUAGE", "it")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["model_id"], "mock");
    assert_eq!(doc["language"], "it");
}
