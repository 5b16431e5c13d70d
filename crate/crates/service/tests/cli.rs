//! Runs the `askloop` binary end to end.

use std::process::{Command, Output};

use askloop_core::ftdata::Manifest;
use askloop_core::household::LayoutPool;
use askloop_core::records::load_records;
use askloop_core::scenario::ScenarioSpec;
use askloop_core::{Context, Variant};

fn askloop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_askloop")).args(args).output().expect("binary runs")
}

#[test]
fn run_writes_one_record_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let o = askloop(&["run", "--seeds", "0..99", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = load_records(&out).unwrap();
    assert_eq!(recs.len(), 100);
    assert!(recs.iter().all(|r| r.success() && r.policy == "scripted-aba"));
    assert_eq!(recs.iter().map(|r| r.context.seed).collect::<Vec<_>>(), (0..100).collect::<Vec<_>>());
}

#[test]
fn ftdata_without_noise_masks_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let o = askloop(&["ftdata", "--n", "8", "--p", "0", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.counts.episodes, 8);
    assert_eq!(m.counts.masked_records, 0);
    assert!(m.counts.qa_records > 0);
    for (file, hash) in &m.sha256 {
        let bytes = std::fs::read(dir.path().join(file)).unwrap();
        assert_eq!(&askloop_core::ftdata::sha256_hex(&bytes), hash, "{file}");
    }
}

#[test]
fn eval_on_the_household_fixture() {
    let o = askloop(&["eval", "--fixture", "household-mug", "--format", "structured", "--threshold", "success_rate>=100"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let all = v["cells"].as_array().unwrap().iter().find(|c| c["column"] == "All").unwrap();
    assert_eq!(all["success_rate"], 100.0);
    assert_eq!(all["episodes"], 1);
    // Length counts actions; the transcript has one more observation line.
    assert_eq!(all["length_succ"]["mean"], 9.0);
}

#[test]
fn failed_threshold_and_usage_errors_have_distinct_codes() {
    let o = askloop(&["eval", "--fixture", "household-mug", "--threshold", "success_rate<=50"]);
    assert_eq!(o.status.code(), Some(3));
    let o = askloop(&["run", "--seeds", "9..1", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    let o = askloop(&["eval", "--fixture", "household-mug", "--format", "yaml"]);
    assert_eq!(o.status.code(), Some(2));
    let o = askloop(&["eval", "--records", "/nonexistent/records.jsonl"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gen_matches_the_library() {
    let o = askloop(&["gen", "--variant", "ambiguous", "--pool", "ood", "--seed", "42"]);
    assert!(o.status.success());
    let ctx: Context = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(ctx, ScenarioSpec::household(Variant::Ambiguous, LayoutPool::Ood).context(42).unwrap());
}

#[test]
fn probe_oracle_reports_full_accuracy_for_rules() {
    let o = askloop(&["probe-oracle"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["per_scenario"].as_array().unwrap().len(), 8);
    assert_eq!(v["mean"], 100.0);
}
