//! End-to-end tests of the `shruti` binary: exit codes, file outputs, and
//! report shapes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn shruti(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shruti"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf-8 stderr")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("process exits normally")
}

const CORPUS: &str = r#"{"seed":1,"verses":[{"id":"v1","tokens":[
    {"surface":"a","lemma":1,"tones":["mid"]},
    {"surface":"b","lemma":2,"tones":["mid"]},
    {"surface":"c","lemma":3,"tones":["mid"]}]}]}"#;

fn write_corpus(dir: &Path) -> String {
    let path = dir.join("corpus.json");
    fs::write(&path, CORPUS).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn encode_produces_the_documented_jata_text() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path());
    let out = shruti(&["encode", "--config", &corpus, "--patha", "jata"]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(stdout(&out), "v1\tjata\ta/b/b/a/a/b // b/c/c/b/b/c\n");
}

#[test]
fn unknown_patha_is_a_usage_error_naming_all_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path());
    let out = shruti(&["encode", "--config", &corpus, "--patha", "krama"]);
    assert_eq!(exit_code(&out), 3);
    let message = stderr(&out);
    for kind in [
        "jata", "mala", "sikha", "rekha", "dhvaja", "danda", "ratha", "ghana",
    ] {
        assert!(message.contains(kind), "missing {kind} in {message}");
    }
}

#[test]
fn unreadable_or_malformed_corpus_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let out = shruti(&[
        "encode",
        "--config",
        missing.to_str().unwrap(),
        "--patha",
        "jata",
    ]);
    assert_eq!(exit_code(&out), 2);

    let garbled = dir.path().join("garbled.json");
    fs::write(&garbled, "{not json").unwrap();
    let out = shruti(&[
        "encode",
        "--config",
        garbled.to_str().unwrap(),
        "--patha",
        "jata",
    ]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn clean_encode_verify_pipeline_passes() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path());
    let rec = dir.path().join("rec.txt");
    let out = shruti(&[
        "encode",
        "--config",
        &corpus,
        "--patha",
        "ghana",
        "--out",
        rec.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let out = shruti(&["verify", "--config", &corpus, rec.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["verses"][0]["overall"], true);
}

#[test]
fn edited_occurrence_fails_the_textual_layer() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path());
    let rec = dir.path().join("rec.txt");
    let out = shruti(&[
        "encode",
        "--config",
        &corpus,
        "--patha",
        "jata",
        "--out",
        rec.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let text = fs::read_to_string(&rec).unwrap();
    // Swap one occurrence of "a" for "c" inside the first group.
    let edited = text.replace("a/b/b/a/a/b", "a/b/b/c/a/b");
    assert_ne!(edited, text);
    fs::write(&rec, edited).unwrap();
    let out = shruti(&["verify", "--config", &corpus, rec.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["passed"], false);
    assert_eq!(report["verses"][0]["textual"], false);
    assert_eq!(report["verses"][0]["phonetic"], true);
    assert_eq!(report["verses"][0]["flagged"], serde_json::json!([3]));
}

#[test]
fn tone_edited_occurrence_fails_only_the_phonetic_layer() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path());
    let rec = dir.path().join("rec.txt");
    shruti(&[
        "encode",
        "--config",
        &corpus,
        "--patha",
        "jata",
        "--out",
        rec.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&rec).unwrap();
    // Re-tone the very first occurrence: same word, wrong contour.
    let edited = text.replacen("\ta/", "\ta^h/", 1);
    assert_ne!(edited, text);
    fs::write(&rec, edited).unwrap();
    let out = shruti(&["verify", "--config", &corpus, rec.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["verses"][0]["textual"], true);
    assert_eq!(report["verses"][0]["phonetic"], false);
    assert_eq!(report["verses"][0]["semantic"], true);
    assert_eq!(report["verses"][0]["mismatches"], serde_json::json!([0]));
}

const SIM_CONFIG: &str = r#"{
  "seed": 5,
  "trials": 4,
  "verses": 1,
  "length_range": [2, 4],
  "groups": [
    { "patha": "jata", "size": 3, "scholar_weight": 1.0 },
    { "patha": "ghana", "size": 3, "scholar_weight": 1.0 }
  ],
  "fault": { "kind": "substitute_occurrence", "rate": 0.5 },
  "adversary": "random",
  "consensus_round_interval": 1
}"#;

#[test]
fn simulate_writes_deterministic_outputs_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sim.json");
    fs::write(&config, SIM_CONFIG).unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = shruti(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    }
    let csv_a = fs::read_to_string(out_a.join("metrics.csv")).unwrap();
    let csv_b = fs::read_to_string(out_b.join("metrics.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    assert!(csv_a.starts_with("trial,layer,detected,corrected,undetected,ties\n"));
    assert_eq!(csv_a.lines().count(), 1 + 4 * 3);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 5);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["config"]["trials"], 4);
    assert!(manifest["duration_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(
        manifest["outputs"],
        serde_json::json!(["metrics.csv", "summary.json"])
    );
}

#[test]
fn simulate_seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sim.json");
    fs::write(&config, SIM_CONFIG).unwrap();
    let out_dir = dir.path().join("out");
    let out = shruti(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--seed",
        "99",
    ]);
    assert_eq!(exit_code(&out), 0);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 99);
    assert_eq!(
        manifest["config"]["seed"], 99,
        "snapshot reflects the effective seed"
    );
}

#[test]
fn invalid_sim_config_exits_2_with_a_field_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sim.json");
    fs::write(
        &config,
        SIM_CONFIG.replace("\"trials\": 4", "\"trials\": 0"),
    )
    .unwrap();
    let out = shruti(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(
        stderr(&out).contains("trials must be ≥ 1"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn ledger_round_trip_detects_a_tampered_line() {
    let dir = tempfile::tempdir().unwrap();
    let chain = dir.path().join("chain.jsonl");
    let chain_str = chain.to_str().unwrap();
    for payload in [
        r#"{"event":"register","verse":"v1"}"#,
        r#"{"event":"round","n":1}"#,
    ] {
        let out = shruti(&["ledger", "append", "--config", chain_str, payload]);
        assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    }
    let out = shruti(&["ledger", "verify", "--config", chain_str]);
    assert_eq!(exit_code(&out), 0);

    // Rewrite block 1's payload; the stored digests no longer match.
    let text = fs::read_to_string(&chain).unwrap();
    let mut lines: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    lines[1]["payload"] = serde_json::json!("ZXZpbA==");
    let rewritten: String = lines.iter().map(|l| format!("{l}\n")).collect();
    fs::write(&chain, rewritten).unwrap();
    let out = shruti(&["ledger", "verify", "--config", chain_str]);
    assert_eq!(exit_code(&out), 1);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["valid"], false);
    assert_eq!(report["first_invalid"], 1);
    assert!(stderr(&out).contains("height 1"), "{}", stderr(&out));
}

#[test]
fn ledger_rejects_malformed_chain_files() {
    let dir = tempfile::tempdir().unwrap();
    let chain = dir.path().join("chain.jsonl");
    fs::write(&chain, "definitely not json\n").unwrap();
    let out = shruti(&["ledger", "verify", "--config", chain.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn ledger_experiment_prints_the_detection_table() {
    let out = shruti(&["ledger", "experiment", "--k", "2", "--blocks", "6"]);
    assert_eq!(exit_code(&out), 0);
    let table = stdout(&out);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(
        lines,
        vec![
            "k,m,c,detection",
            "2,1,0,1",
            "2,1,1,0",
            "2,1,2,0",
            "2,2,0,1",
            "2,2,1,1",
            "2,2,2,0",
        ]
    );
}

#[test]
fn bare_invocation_is_a_usage_error_and_help_is_not() {
    let out = shruti(&[]);
    assert_eq!(exit_code(&out), 3);
    let out = shruti(&["--help"]);
    assert_eq!(exit_code(&out), 0);
    assert!(stdout(&out).contains("encode"));
}
