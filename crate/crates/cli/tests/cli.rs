use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clap::Parser;
use rsst_cli::{run, Cli, EvalFile, SelectReport};
use rsst_core::Error;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn rsst(args: &[&str]) -> rsst_core::Result<Value> {
    let cli = Cli::try_parse_from(std::iter::once("rsst").chain(args.iter().copied())).expect("valid arguments");
    run(&cli)
}

fn binary(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rsst"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stderr_error(out: &Output) -> (String, String) {
    let v: Value = serde_json::from_slice(&out.stderr).expect("stderr is one JSON object");
    (
        v["error"]["kind"].as_str().unwrap().to_string(),
        v["error"]["message"].as_str().unwrap().to_string(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_selection(path: &Path) -> SelectReport {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn worked_example_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sel.json");
    let table = fixture("table2_fvt.csv");
    rsst(&["select", "--fvt", s(&table), "--method", "roughset", "--out", s(&out)]).unwrap();
    let report = read_selection(&out);
    assert_eq!(report.selection.calls(), ["s3", "s1"]);
    assert_eq!(report.vocabulary_size, 3);
    let reduct = report.selection.reduct.as_ref().unwrap();
    assert_eq!(reduct.calls(), ["s3", "s1"]);
}

#[test]
fn pipeline_outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run_once = || -> Vec<Vec<u8>> {
        let d = s(dir.path());
        rsst(&["synth", "--samples-per-class", "40", "--vocabulary-size", "15", "--out-dir", d]).unwrap();
        let records = format!("{d}/records.jsonl");
        rsst(&["featurize", "--records", &records, "--out-dir", d]).unwrap();
        rsst(&["select", "--records", &records, "--method", "ig", "--out-dir", d]).unwrap();
        let sel = format!("{d}/selection.json");
        let csv = format!("{d}/eval.csv");
        rsst(&[
            "eval", "--records", &records, "--selection", &sel, "--lengths", "3,15", "--trees", "20", "--folds", "5",
            "--out-dir", d, "--csv", &csv,
        ])
        .unwrap();
        ["records.jsonl", "answer_key.json", "fvt.csv", "selection.json", "eval.json", "eval.csv"]
            .iter()
            .map(|f| fs::read(Path::new(d).join(f)).unwrap())
            .collect()
    };
    let a = run_once();
    let b = run_once();
    assert_eq!(a, b);
    let eval: EvalFile = serde_json::from_slice(&a[4]).unwrap();
    assert_eq!(eval.report.lengths.iter().map(|r| r.length).collect::<Vec<_>>(), [3, 15]);
    assert_eq!(eval.seed, 42);
}

#[test]
fn missing_input_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.jsonl");
    let out = binary(&["select", "--records", s(&missing), "--out-dir", s(dir.path())], &[]);
    assert_eq!(out.status.code(), Some(1));
    let (kind, message) = stderr_error(&out);
    assert_eq!(kind, "unreadable_path");
    assert!(message.contains("absent.jsonl"), "{message}");
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"seed": 3, "z_critical": 2.0}"#).unwrap();
    let table = fixture("table2_fvt.csv");
    let out = binary(&["select", "--config", s(&cfg), "--fvt", s(&table), "--out-dir", s(dir.path())], &[]);
    assert_eq!(out.status.code(), Some(1));
    let (kind, message) = stderr_error(&out);
    assert_eq!(kind, "config");
    assert!(message.contains("z_critical"), "{message}");
}

#[test]
fn environment_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain");
    let noisy = dir.path().join("noisy");
    let args = |d: &Path| vec!["synth".to_string(), "--samples-per-class".into(), "10".into(), "--out-dir".into(), s(d).into()];
    let a = args(&plain);
    let b = args(&noisy);
    assert!(binary(&a.iter().map(String::as_str).collect::<Vec<_>>(), &[]).status.success());
    let envs = [("RSST_SEED", "7"), ("SEED", "7"), ("RSST_CONFIG", "/nonexistent.json"), ("RAYON_NUM_THREADS", "1")];
    assert!(binary(&b.iter().map(String::as_str).collect::<Vec<_>>(), &envs).status.success());
    for f in ["records.jsonl", "answer_key.json"] {
        assert_eq!(fs::read(plain.join(f)).unwrap(), fs::read(noisy.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_file_and_flags_compose() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    rsst(&["synth", "--samples-per-class", "30", "--vocabulary-size", "12", "--out-dir", d]).unwrap();
    let records = dir.path().join("records.jsonl");
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, format!(r#"{{"records": "{}", "method": "chi", "top_k": 4}}"#, s(&records))).unwrap();
    let first = dir.path().join("first.json");
    rsst(&["select", "--config", s(&cfg), "--out", s(&first)]).unwrap();
    let report = read_selection(&first);
    assert_eq!(report.selection.ranking.len(), 4);
    assert_eq!(report.selection.method.as_str(), "chi");

    let second = dir.path().join("second.json");
    rsst(&["select", "--config", s(&cfg), "--top-k", "6", "--out", s(&second)]).unwrap();
    assert_eq!(read_selection(&second).selection.ranking.len(), 6);

    // the embedded config reproduces the run
    let embedded = dir.path().join("embedded.json");
    fs::write(&embedded, serde_json::to_string(&report.config).unwrap()).unwrap();
    let third = dir.path().join("third.json");
    rsst(&["select", "--config", s(&embedded), "--out", s(&third)]).unwrap();
    assert_eq!(fs::read(&first).unwrap(), fs::read(&third).unwrap());
}

#[test]
fn ig_with_full_k_is_a_permutation() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    rsst(&["synth", "--samples-per-class", "30", "--vocabulary-size", "20", "--out-dir", d]).unwrap();
    let records = format!("{d}/records.jsonl");
    rsst(&["select", "--records", &records, "--method", "ig", "--top-k", "20", "--out-dir", d]).unwrap();
    let report = read_selection(&dir.path().join("selection.json"));
    let mut calls = report.selection.calls();
    calls.sort();
    let vocab: Vec<String> = (0..20).map(|i| format!("sc{i:03}")).collect();
    assert_eq!(calls, vocab);
}

#[test]
fn rsst_finds_planted_calls() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    rsst(&["synth", "--seed", "42", "--out-dir", d]).unwrap();
    let records = format!("{d}/records.jsonl");
    rsst(&["select", "--records", &records, "--method", "rsst", "--top-k", "10", "--out-dir", d]).unwrap();
    let report = read_selection(&dir.path().join("selection.json"));
    let key: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("answer_key.json")).unwrap()).unwrap();
    let calls = report.selection.calls();
    for side in ["malware", "benign"] {
        for planted in key[side].as_array().unwrap() {
            assert!(calls.iter().any(|c| c == planted.as_str().unwrap()), "{planted} missing from {calls:?}");
        }
    }
    let filter = report.selection.filter.as_ref().unwrap();
    assert!(filter.malware.iter().all(|c| c.z > 1.96));
    assert!(filter.benign.iter().all(|c| c.z < -1.96));
}

#[test]
fn eval_rejects_lengths_beyond_the_ranking() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    rsst(&["synth", "--samples-per-class", "20", "--vocabulary-size", "9", "--out-dir", d]).unwrap();
    let records = format!("{d}/records.jsonl");
    rsst(&["select", "--records", &records, "--method", "su", "--out-dir", d]).unwrap();
    let sel = format!("{d}/selection.json");
    let err = rsst(&["eval", "--records", &records, "--selection", &sel, "--lengths", "10", "--out-dir", d]).unwrap_err();
    assert!(err.to_string().contains("requested 10 of 9"), "{err}");
    let out = binary(&["eval", "--records", &records, "--selection", &sel, "--lengths", "10", "--out-dir", d], &[]);
    assert_eq!(stderr_error(&out).0, "length_exceeds_ranking");
}

#[test]
fn single_class_corpus_fails_early() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("records.jsonl");
    fs::write(
        &records,
        "{\"sample_id\":\"a\",\"label\":\"M\",\"counts\":{\"read\":2},\"total\":2}\n\
         {\"sample_id\":\"b\",\"label\":\"M\",\"counts\":{\"open\":1},\"total\":1}\n",
    )
    .unwrap();
    let err = rsst(&["select", "--records", s(&records), "--out-dir", s(dir.path())]).unwrap_err();
    assert!(matches!(err, Error::SingleClass));
    assert!(!dir.path().join("selection.json").exists());
}

#[test]
fn ingest_and_featurize_fixture_logs() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/logs/manifest.csv");
    rsst(&["ingest", "--manifest", s(&manifest), "--out-dir", d]).unwrap();
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("ingest_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["samples"], 10);
    let records = format!("{d}/records.jsonl");
    let bins = format!("{d}/bins.csv");
    let graph = format!("{d}/graph.jsonl");
    rsst(&[
        "featurize", "--records", &records, "--out-dir", d, "--bins-out", &bins, "--graph-manifest", s(&manifest),
        "--graph-out", &graph,
    ])
    .unwrap();
    assert_eq!(fs::read_to_string(&graph).unwrap().lines().count(), 10);
    let fvt = fs::read_to_string(dir.path().join("fvt.csv")).unwrap();
    assert_eq!(fvt.lines().count(), 11);
    assert!(fs::read_to_string(&bins).unwrap().lines().nth(1).unwrap().contains("B"));
}

#[test]
fn oracle_check_passes() {
    let v = rsst(&["oracle-check", "--trials", "20", "--seed", "5"]).unwrap();
    assert_eq!(v["region_mismatches"], 0);
    assert_eq!(v["reduct_mismatches"], 0);
    assert_eq!(v["minimality_violations"], 0);
}
