use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn qlens(store: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlens"))
        .arg("--store")
        .arg(store)
        .args(args)
        .output()
        .unwrap()
}

fn ingest_demo(store: &Path) -> Output {
    let manifest = fixture("demo_manifest.json");
    let log = fixture("demo_log.jsonl");
    qlens(store, &["ingest", "--manifest", manifest.to_str().unwrap(), "--log", log.to_str().unwrap()])
}

#[test]
fn ingest_demo_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = ingest_demo(dir.path());
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["sessions_added"], 3);
    assert_eq!(report["lines_skipped"], 0);
    assert_eq!(report["drags_dropped"], 0);

    let again: Value = serde_json::from_slice(&ingest_demo(dir.path()).stdout).unwrap();
    assert_eq!(again["overwritten"].as_array().unwrap().len(), 3);
}

#[test]
fn usage_and_runtime_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = qlens(dir.path(), &["ingest", "--manifest", "missing.json", "--log", "missing.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"question_id":"q","slot_count":0}"#).unwrap();
    let log = fixture("demo_log.jsonl");
    let out = qlens(dir.path(), &["ingest", "--manifest", bad.to_str().unwrap(), "--log", log.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let out = qlens(dir.path(), &["report", "q-unknown"]);
    assert_eq!(out.status.code(), Some(1));

    let out = qlens(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_filters_and_formats() {
    let dir = tempfile::tempdir().unwrap();
    ingest_demo(dir.path());
    let all: Value = serde_json::from_slice(&qlens(dir.path(), &["report", "q-product"]).stdout).unwrap();
    assert_eq!(all["overview"]["student_count"], 3);
    let g2: Value =
        serde_json::from_slice(&qlens(dir.path(), &["report", "q-product", "--grades", "2"]).stdout).unwrap();
    assert_eq!(g2["overview"]["student_count"], 2);
    assert_eq!(g2["query"]["filter"]["grades"], serde_json::json!([2]));
    let four: Value =
        serde_json::from_slice(&qlens(dir.path(), &["report", "q-product", "--top-errors", "4"]).stdout).unwrap();
    assert!(four["errors"].as_array().unwrap().len() <= 4);

    let table = qlens(dir.path(), &["--format", "table", "report", "q-product"]);
    assert!(table.status.success());
    assert!(String::from_utf8_lossy(&table.stdout).contains("students 3"));
}

#[test]
fn recommend_and_export() {
    let dir = tempfile::tempdir().unwrap();
    ingest_demo(dir.path());
    let rec: Value =
        serde_json::from_slice(&qlens(dir.path(), &["recommend", "q-product", "--rank", "1"]).stdout).unwrap();
    assert_eq!(rec["status"], "ok");
    let out = qlens(dir.path(), &["recommend", "q-product", "--rank", "9"]);
    assert_eq!(out.status.code(), Some(1));

    let export = dir.path().join("export.json");
    let model = dir.path().join("model.json");
    let out = qlens(
        dir.path(),
        &["export", "q-product", "--out", export.to_str().unwrap(), "--model-out", model.to_str().unwrap()],
    );
    assert!(out.status.success());
    let e: Value = serde_json::from_str(&std::fs::read_to_string(&export).unwrap()).unwrap();
    assert_eq!(e["schema"], "qlens-analytics/1");
    assert_eq!(e["recommendations"].as_array().unwrap().len(), e["views"]["errors"].as_array().unwrap().len());
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(m["schema"], "qlens-model/1");
}

#[test]
fn generate_is_deterministic_and_ingestible() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = fixture("demo_manifest.json");
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for out in [&a, &b] {
        let o = qlens(
            dir.path(),
            &["generate", "--manifest", manifest.to_str().unwrap(), "--out", out.to_str().unwrap(), "--students", "50", "--seed", "1"],
        );
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let o = qlens(dir.path(), &["ingest", "--manifest", manifest.to_str().unwrap(), "--log", a.to_str().unwrap()]);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["sessions_added"], 50);
    assert_eq!(report["drags_dropped"], 0);

    let o = qlens(
        dir.path(),
        &["generate", "--manifest", manifest.to_str().unwrap(), "--out", a.to_str().unwrap(), "--mix", "0.5,0.5,0.5"],
    );
    assert_eq!(o.status.code(), Some(2));
}
