use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mms"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gen(dir: &Path, kind: &str, n: usize, m: usize, seed: u64, count: usize) -> Output {
    mms(&[
        "gen",
        "--kind",
        kind,
        "--n",
        &n.to_string(),
        "--m",
        &m.to_string(),
        "--seed",
        &seed.to_string(),
        "--count",
        &count.to_string(),
        "--out-dir",
        p(dir),
    ])
}

#[test]
fn gen_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(gen(a.path(), "goods", 3, 5, 1, 3).status.success());
    assert!(gen(b.path(), "goods", 3, 5, 1, 3).status.success());
    for i in 0..3 {
        let name = format!("instance_{i:04}.json");
        assert_eq!(
            fs::read(a.path().join(&name)).unwrap(),
            fs::read(b.path().join(&name)).unwrap()
        );
    }
}

#[test]
fn gen_chores_are_non_positive_and_counted() {
    let dir = tempfile::tempdir().unwrap();
    assert!(gen(dir.path(), "chores", 4, 10, 7, 500).status.success());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 500);
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("instance_0000.json")).unwrap()).unwrap();
    for row in v["valuations"].as_array().unwrap() {
        for x in row.as_array().unwrap() {
            assert!(x.as_i64().unwrap() <= 0);
        }
    }
}

#[test]
fn solve_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    assert!(gen(dir.path(), "goods", 4, 10, 3, 1).status.success());
    let inst = dir.path().join("instance_0000.json");
    let out = dir.path().join("outcome.json");
    let trace = dir.path().join("trace.json");
    let solved = mms(&["solve", "--input", p(&inst), "--out", p(&out), "--trace-out", p(&trace)]);
    assert_eq!(
        solved.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&solved.stderr)
    );
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["status"], "solved");
    assert!(v["certificate"].as_array().unwrap().iter().all(|r| r["ok"] == true));
    assert!(trace.exists());

    let checked = mms(&["verify", "--instance", p(&inst), "--result", p(&out)]);
    assert_eq!(checked.status.code(), Some(0), "{}", stdout(&checked));
    assert!(stdout(&checked).contains("verified"));
}

#[test]
fn tampered_allocation_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    fs::write(&inst, r#"{"kind":"goods","n":2,"m":3,"valuations":[[4,4,1],[1,1,10]]}"#).unwrap();
    let out = dir.path().join("o.json");
    assert_eq!(
        mms(&["solve", "--input", p(&inst), "--out", p(&out)]).status.code(),
        Some(0)
    );
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let bundles = v["allocation"]["bundles"].as_array_mut().unwrap();
    bundles.swap(0, 1);
    fs::write(&out, v.to_string()).unwrap();
    let checked = mms(&["verify", "--instance", p(&inst), "--result", p(&out)]);
    assert_eq!(checked.status.code(), Some(2));
    assert!(stdout(&checked).contains("FAIL"));
}

#[test]
fn verify_plain_allocation_and_skip_mu() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    fs::write(&inst, r#"{"kind":"chores","n":2,"m":2,"valuations":[[-3,0],[-1,-1]]}"#).unwrap();
    let alloc = dir.path().join("a.json");
    fs::write(&alloc, r#"{"bundles":[[2],[1]]}"#).unwrap();
    assert_eq!(
        mms(&["verify", "--instance", p(&inst), "--result", p(&alloc)])
            .status
            .code(),
        Some(0)
    );
    let skipped = mms(&["verify", "--instance", p(&inst), "--result", p(&alloc), "--skip-mu"]);
    assert_eq!(skipped.status.code(), Some(0));
}

#[test]
fn several_inputs_in_parallel() {
    let dir = tempfile::tempdir().unwrap();
    assert!(gen(dir.path(), "goods", 2, 6, 9, 4).status.success());
    let outs = tempfile::tempdir().unwrap();
    let inputs: Vec<String> = (0..4)
        .map(|i| p(&dir.path().join(format!("instance_{i:04}.json"))).to_string())
        .collect();
    let mut args = vec!["solve", "--jobs", "3", "--out-dir", p(outs.path()), "--input"];
    args.extend(inputs.iter().map(String::as_str));
    assert_eq!(mms(&args).status.code(), Some(0));
    assert_eq!(fs::read_dir(outs.path()).unwrap().count(), 4);
}

#[test]
fn malformed_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"kind\": ").unwrap();
    let o = mms(&["solve", "--input", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn bound_rows() {
    let row = |c: &str, kind: &str| stdout(&mms(&["bound", "--c", c, "--kind", kind]));
    assert!(row("5", "goods").contains("n_c=1"));
    assert!(row("7", "goods").contains("n_c=8"));
    assert!(row("6", "chores").contains("n_c=166"));
    assert!(row("8", "goods").contains("within_n_c=true"));
    assert_eq!(mms(&["bound", "--c", "-1"]).status.code(), Some(1));
    let custom = stdout(&mms(&["bound", "--c", "8", "--alpha-goods", "1/2"]));
    assert!(custom.contains("n_c=157"), "{custom}");
}

#[test]
fn order_and_mms_queries() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.json");
    fs::write(
        &inst,
        r#"{"kind":"goods","n":2,"m":3,"valuations":[[1,5,3],[2,1,"1/2"]]}"#,
    )
    .unwrap();
    let out = dir.path().join("o.json");
    assert!(mms(&["order", "--input", p(&inst), "--out", p(&out)]).status.success());
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["valuations"][0], serde_json::json!([5, 3, 1]));
    assert_eq!(v["source_ranks"][0], serde_json::json!([2, 3, 1]));
    let q: Value =
        serde_json::from_str(&stdout(&mms(&["mms", "--input", p(&inst), "--oracle", "exhaustive"]))).unwrap();
    assert_eq!(q["agents"][0]["mu"], 4);
    assert_eq!(q["agents"][1]["mu"], "3/2");
}
