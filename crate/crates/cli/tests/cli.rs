use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BACKTRACKING: &str = r#"{
  "game": "knapsack", "m": 2, "n": 5,
  "players": [
    {"v": [15, 8, -3, 43, -15], "w": [70, -79, -8, -62, -96], "budget": -140,
     "c": {"1": [39, -90, 11, -84, -43]}},
    {"v": [24, 13, 44, -1, -45], "w": [69, 25, -39, -74, 70], "budget": 40.8,
     "c": {"0": [-73, -58, -78, -49, 72]}}
  ]
}"#;

fn ipg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipg")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_is_deterministic() {
    let args = ["gen", "--game", "knapsack", "--n", "6", "--m", "3", "--ins", "4", "--seed", "17"];
    let (a, b) = (ipg(&args), ipg(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let other = ipg(&["gen", "--game", "knapsack", "--n", "6", "--m", "3", "--ins", "4", "--seed", "18"]);
    assert_ne!(a.stdout, other.stdout);
    let keg = ipg(&["gen", "--game", "keg", "--vertices", "12", "--seed", "3"]);
    assert_eq!(keg.stdout, ipg(&["gen", "--game", "keg", "--vertices", "12", "--seed", "3"]).stdout);
}

#[test]
fn solve_reproduces_backtracking_run() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("trace.json");
    fs::write(&inst, BACKTRACKING).unwrap();
    let rec = dir.path().join("record.json");
    let out = ipg(&["solve", path(&inst), "--out", path(&rec)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_str(&fs::read_to_string(&rec).unwrap()).unwrap();
    assert_eq!(r["iterations"], 5);
    assert_eq!(r["backtracks"], 1);
    assert_eq!(r["status"], "equilibrium");
    let check = ipg(&["verify", path(&inst), path(&rec)]);
    assert_eq!(check.status.code(), Some(0));
}

#[test]
fn limits_and_bad_input_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("trace.json");
    fs::write(&inst, BACKTRACKING).unwrap();
    assert_eq!(ipg(&["solve", path(&inst), "--max-iter", "1"]).status.code(), Some(3));

    let keg = dir.path().join("keg.json");
    let out = ipg(&["gen", "--game", "keg", "--vertices", "10", "--seed", "1", "--out", path(&keg)]);
    assert!(out.status.success());
    assert_eq!(ipg(&["solve", path(&keg), "--method", "potential"]).status.code(), Some(2));

    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{\"game\": \"knapsack\"").unwrap();
    assert_eq!(ipg(&["solve", path(&broken)]).status.code(), Some(2));
    assert_eq!(ipg(&["gen", "--game", "knapsack", "--m", "2"]).status.code(), Some(2));
}

#[test]
fn tampered_record_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("trace.json");
    fs::write(&inst, BACKTRACKING).unwrap();
    let out = ipg(&["solve", path(&inst)]);
    let mut r: Value = serde_json::from_slice(&out.stdout).unwrap();
    // Put all of player 0's weight on its first listed strategy.
    let atoms = &mut r["profile"]["players"][0]["atoms"];
    let first = atoms[0][0].clone();
    *atoms = serde_json::json!([[first, 1.0]]);
    let rec = dir.path().join("bad.json");
    fs::write(&rec, r.to_string()).unwrap();
    assert_eq!(ipg(&["verify", path(&inst), path(&rec)]).status.code(), Some(4));
}

#[test]
fn bench_writes_csv() {
    let out = ipg(&["bench", "--suite", "knapsack-2p", "--sizes", "6", "--instances", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(header, "n,INS,method,time,iter,pNE,mNE,|S1|,|S2|,numb. back,verified");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().filter(|r| !r.contains(",avg,")).all(|r| r.ends_with(",yes")));
}
