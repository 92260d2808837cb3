use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn evigraph(repo: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evigraph"))
        .arg("--repo")
        .arg(repo)
        .args(args)
        .env_remove("EVIGRAPH_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(stdout(o).trim()).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn ok(o: Output) -> Output {
    assert!(o.status.success(), "stdout {}\nstderr {}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    o
}

#[test]
fn usage_and_help_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(evigraph(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(evigraph(dir.path(), &["bogus"]).status.code(), Some(1));
    let o = evigraph(dir.path(), &["--json", "bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["error"], "usage");
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    ok(evigraph(dir.path(), &["init"]));
    let o = evigraph(dir.path(), &["--json", "frontier"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o)["exit_code"], 2);
    assert_eq!(evigraph(dir.path(), &["evidence", "show", "e9"]).status.code(), Some(2));
}

#[test]
fn fixtures_replay() {
    let dir = tempfile::tempdir().unwrap();
    let o = ok(evigraph(dir.path(), &["--fixtures", "table1", "edge", "classify", "e1", "e2"]));
    assert!(stdout(&o).starts_with("revision + reanalysis (conflated)"), "{}", stdout(&o));
    let o = ok(evigraph(dir.path(), &["--fixtures", "table2", "--json", "frontier"]));
    let f = json(&o);
    assert_eq!(f["best_hypothesis_id"], "h2c");
    assert_eq!(f["best_method_id"], "m2");
    let o = ok(evigraph(dir.path(), &["--fixtures", "table2", "export", "dot", "graph"]));
    assert!(stdout(&o).starts_with("digraph"));
}

#[test]
fn meta_commands() {
    let dir = tempfile::tempdir().unwrap();
    let f = json(&ok(evigraph(dir.path(), &["--json", "meta", "fisher", "0.02", "0.03"])));
    assert!((f["p"].as_f64().unwrap() - 0.0050).abs() < 2e-4);
    let s = json(&ok(evigraph(dir.path(), &["--json", "meta", "stouffer", "0.05", "0.05"])));
    assert!((s["p"].as_f64().unwrap() - 0.0100).abs() < 2e-4);
    let p = json(&ok(evigraph(dir.path(), &["--json", "meta", "pool", "0.5:0.1", "0.5:0.2"])));
    assert!((p["estimate"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(evigraph(dir.path(), &["meta", "fisher", "1.5"]).status.code(), Some(2));
}

#[test]
fn simulate_ingest_run_and_revise() {
    let dir = tempfile::tempdir().unwrap();
    let repo = dir.path().join("repo");
    let work = dir.path();
    std::fs::write(
        work.join("cfg.json"),
        r#"{"seed": 2, "participants": 100, "items": 5, "design": "parallel", "confounder_strength": 1.5}"#,
    )
    .unwrap();
    ok(evigraph(&repo, &["init"]));
    ok(evigraph(&repo, &["simulate", work.join("cfg.json").to_str().unwrap(), "--out-dir", work.to_str().unwrap()]));
    let d = json(&ok(evigraph(
        &repo,
        &["--json", "dataset", "add", work.join("scenario.csv").to_str().unwrap(), work.join("scenario.json").to_str().unwrap()],
    )));
    let d = d["id"].as_str().unwrap().to_string();
    assert!(d.starts_with("d-"));

    std::fs::write(work.join("naive.dag"), "passive [treatment, binary]\nmissing [outcome, count]\nexperience [continuous]\npassive -> missing\n").unwrap();
    std::fs::write(
        work.join("adjusted.dag"),
        "passive [treatment, binary]\nmissing [outcome, count]\nexperience [continuous]\nexperience -> passive; experience -> missing; passive -> missing\n",
    )
    .unwrap();
    std::fs::write(work.join("lm.json"), r#"{"id": "lm", "kind": "linear_model"}"#).unwrap();
    ok(evigraph(&repo, &["hypothesis", "add", "naive", work.join("naive.dag").to_str().unwrap()]));
    ok(evigraph(&repo, &["hypothesis", "add", "adjusted", work.join("adjusted.dag").to_str().unwrap()]));
    let sets = json(&ok(evigraph(&repo, &["--json", "hypothesis", "adjustment-sets", "adjusted"])));
    assert_eq!(sets["adjustment_sets"], serde_json::json!([["experience"]]));
    ok(evigraph(&repo, &["method", "add", work.join("lm.json").to_str().unwrap()]));

    ok(evigraph(&repo, &["evidence", "run", "naive", &d, "lm"]));
    ok(evigraph(&repo, &["evidence", "run", "adjusted", &d, "lm", "--parent", "e1"]));
    // a revision needs a declared purpose
    assert_eq!(evigraph(&repo, &["edge", "validate", "e1", "e2"]).status.code(), Some(2));
    let edge = json(&ok(evigraph(&repo, &["--json", "edge", "validate", "e1", "e2", "--purpose", "deconfound"])));
    assert_eq!(edge["assessment"]["revision"]["winner"], "adjusted");
    let f = json(&ok(evigraph(&repo, &["--json", "frontier"])));
    assert_eq!(f["best_hypothesis_id"], "adjusted");
    assert_eq!(f["required_measurements"], serde_json::json!(["experience"]));
    let list = json(&ok(evigraph(&repo, &["--json", "evidence", "list"])));
    assert_eq!(list["evidence"].as_array().unwrap().len(), 2);
}
