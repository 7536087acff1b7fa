use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn civmini(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_civmini"))
        .args(args)
        .current_dir(dir)
        .env_remove("CIVMINI_AGENT_ENDPOINT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn records(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .expect("log exists")
        .lines()
        .map(|l| serde_json::from_str(l).expect("record parses"))
        .collect()
}

const SYNTH: &[&str] = &["optimize", "--objective", "synthetic", "--seed", "3"];

fn optimize(dir: &Path, extra: &[&str]) -> Output {
    let args: Vec<&str> = SYNTH.iter().chain(extra).copied().collect();
    civmini(dir, &args)
}

#[test]
fn optimize_writes_one_record_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let out = optimize(dir.path(), &["--iterations", "10", "--out", "run.jsonl"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log = records(&dir.path().join("run.jsonl"));
    assert_eq!(log.len(), 10);
    let iterations: Vec<u64> = log.iter().map(|r| r["iteration"].as_u64().unwrap()).collect();
    assert_eq!(iterations, (1..=10).collect::<Vec<_>>());
    assert!(log.iter().all(|r| r["method"] == "bo-adaptive"));
    assert!(dir.path().join("run.jsonl.manifest.json").exists());
    assert!(dir.path().join("run.best.json").exists());
}

#[test]
fn resume_continues_without_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let first = optimize(dir.path(), &["--iterations", "6", "--n-min", "8", "--n-max", "16", "--out", "run.jsonl"]);
    assert!(first.status.success());
    let before = records(&dir.path().join("run.jsonl"));

    let again = optimize(dir.path(), &["--iterations", "9", "--n-min", "8", "--n-max", "16", "--out", "run.jsonl"]);
    assert_eq!(again.status.code(), Some(2), "a non-empty log is not overwritten");

    let resumed =
        optimize(dir.path(), &["--iterations", "9", "--n-min", "8", "--n-max", "16", "--out", "run.jsonl", "--resume"]);
    assert!(resumed.status.success(), "{}", String::from_utf8_lossy(&resumed.stderr));
    let after = records(&dir.path().join("run.jsonl"));
    assert_eq!(after.len(), 9);
    assert_eq!(&after[..6], &before[..]);
    let iterations: Vec<u64> = after.iter().map(|r| r["iteration"].as_u64().unwrap()).collect();
    assert_eq!(iterations, (1..=9).collect::<Vec<_>>());

    let changed =
        optimize(dir.path(), &["--iterations", "9", "--n-min", "8", "--n-max", "32", "--out", "run.jsonl", "--resume"]);
    assert_eq!(changed.status.code(), Some(2));
}

#[test]
fn es_log_is_tagged() {
    let dir = tempfile::tempdir().unwrap();
    let out = optimize(dir.path(), &["--method", "es", "--iterations", "5", "--games", "8", "--out", "es.jsonl"]);
    assert!(out.status.success());
    let log = records(&dir.path().join("es.jsonl"));
    assert_eq!(log.len(), 5);
    assert!(log.iter().all(|r| r["method"] == "es" && r["n_games"] == 8));
}

#[test]
fn evaluate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = civmini(dir.path(), &["evaluate", "--games", "4", "--seed", "9", "--out", name]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout(&out).contains("Empire wins | Nomads wins:"));
        fs::read(dir.path().join(name)).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));

    let single = civmini(dir.path(), &["evaluate", "--games", "1", "--out", "one.json"]);
    assert!(single.status.success());
}

#[test]
fn play_text_frames_stay_within_the_turn_limit() {
    let dir = tempfile::tempdir().unwrap();
    let out = civmini(dir.path(), &["play", "--seed", "4", "--max-turns", "16", "--out", "game"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("game/frames.txt")).unwrap();
    let frames = text.matches("== frame ").count();
    assert!((1..=16).contains(&frames), "{frames} frames");
    let transcript = fs::read_to_string(dir.path().join("game/transcript.jsonl")).unwrap();
    assert!(transcript.lines().count() > 1);
}

#[test]
fn play_svg_writes_one_file_per_frame() {
    let dir = tempfile::tempdir().unwrap();
    let out = civmini(dir.path(), &["play", "--seed", "4", "--render", "svg", "--out", "svg"]);
    assert!(out.status.success());
    let svgs: Vec<_> = fs::read_dir(dir.path().join("svg"))
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "svg"))
        .collect();
    assert!(!svgs.is_empty());
    assert!(dir.path().join("svg/turn_01.svg").exists());
    assert!(stdout(&out).starts_with(&format!("{} SVG frames", svgs.len())));
}

#[test]
fn report_totals_games() {
    let dir = tempfile::tempdir().unwrap();
    assert!(optimize(dir.path(), &["--method", "random", "--iterations", "4", "--games", "6", "--out", "r.jsonl"])
        .status
        .success());
    let out = civmini(dir.path(), &["report", "r.jsonl", "--threshold", "0"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("total games    24"), "{text}");
    assert!(text.contains("random with 4 records"));
    assert!(text.contains("TTK N->E") && text.contains("TTK E->N"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(civmini(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(civmini(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(
        civmini(dir.path(), &["evaluate", "--agents", "E=external,N=heuristic", "--games", "1"]).status.code(),
        Some(1)
    );
    fs::write(dir.path().join("bad.json"), "{\"empire_soldier_hp\": 1000}").unwrap();
    assert_eq!(civmini(dir.path(), &["evaluate", "--config", "bad.json", "--games", "1"]).status.code(), Some(2));
    assert_eq!(civmini(dir.path(), &["report", "missing.jsonl"]).status.code(), Some(2));
}
