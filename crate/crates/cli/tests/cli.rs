use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const COUNTEREXAMPLE: &str = r#"{"T":"1","density":{"breakpoints":["0","3/4","1"],"values":["4/3","0"]}}"#;
const INVARIANT: &str = r#"{"T":"1/2","atoms":{"zero":"1/4","T":"1/4"},"density":{"breakpoints":["0","1/2"],"values":[1]}}"#;
const FIRST_TIME: &str =
    r#"{"T":"1/2","atoms":{"zero":"1/8","inf":"1/8"},"density":{"breakpoints":["0","1/4","1/2"],"values":[2,1]}}"#;
const UNIFORM_DENSITY: &str = r#"{"T":"1","density":{"breakpoints":["0","1"],"values":[1]}}"#;

fn ilf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ilf"))
        .args(args)
        .env_remove("SEED")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Constructs a path for `law` and stores just the path file.
fn construct_path(dir: &TempDir, law: &Path, kind: &str) -> PathBuf {
    let out = ilf(&["construct", s(law), "--kind", kind]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join(format!("{kind}-path.json"));
    fs::write(&path, json(&out)["path"].to_string()).unwrap();
    path
}

#[test]
fn counterexample_passes_tv_but_not_the_hull() {
    let dir = TempDir::new().unwrap();
    let law = write(&dir, "ce.json", COUNTEREXAMPLE);
    assert_eq!(code(&ilf(&["check", s(&law), "--class", "TV"])), 0);

    let out = ilf(&["check", s(&law), "--class", "ET", "--hull"]);
    assert_eq!(code(&out), 1);
    let witness = &json(&out)["report"]["witness"];
    assert_eq!(witness["integral"], "3/2");
}

#[test]
fn invariant_example_is_a_member() {
    let dir = TempDir::new().unwrap();
    let law = write(&dir, "inv.json", INVARIANT);
    let out = ilf(&["check", s(&law), "--class", "E1T"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["report"]["verdict"], "member");
}

#[test]
fn malformed_input_exits_64() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{\"T\": ");
    assert_eq!(code(&ilf(&["check", s(&bad)])), 64);
    assert_eq!(code(&ilf(&["check", "does-not-exist.json"])), 64);
    assert_eq!(code(&ilf(&["check"])), 64);
    assert_eq!(code(&ilf(&["bound", "--t", "1/2", "--T", "1/2"])), 64);
}

#[test]
fn invariant_construction_starts_at_the_anchor() {
    let dir = TempDir::new().unwrap();
    let law = write(&dir, "inv.json", INVARIANT);
    let out = ilf(&["construct", s(&law), "--kind", "invariant"]);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    assert_eq!(report["path"]["nodes"][0], serde_json::json!(["0/1", "2/1"]));
    assert!(report["plan"]["exact"].as_bool().unwrap());
}

#[test]
fn first_time_construction_hits_on_schedule() {
    let dir = TempDir::new().unwrap();
    let law = write(&dir, "ft.json", FIRST_TIME);
    let out = ilf(&["construct", s(&law), "--kind", "first-time"]);
    assert_eq!(code(&out), 0);
    let plan = &json(&out)["plan"];
    // f⁻¹(1) = 1/2 and f⁻¹(2) = 1/4; the second hit sits f⁻¹(2) after the first.
    assert_eq!(plan["levels"], serde_json::json!(["1/2", "1/4"]));
    assert_eq!(plan["hits"], serde_json::json!(["0/1", "1/4"]));

    let path = construct_path(&dir, &law, "first-time");
    let out = ilf(&["verify", "--path", s(&path), "--target", s(&law), "--locator", "first-hit:-1", "--grid", "20000"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn construction_gate_failure_exits_1() {
    let dir = TempDir::new().unwrap();
    let law = write(&dir, "ce.json", COUNTEREXAMPLE);
    let out = ilf(&["construct", s(&law), "--kind", "invariant"]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["gate"]["verdict"], "non-member");
}

#[test]
fn bound_construction_has_plateau_four() {
    let out = ilf(&["construct", "--kind", "bound:0.2,0.01", "--T", "0.5"]);
    assert_eq!(code(&out), 0);
    let segs = json(&out)["law"]["density"]["segments"].clone();
    let levels: Vec<&str> = segs.as_array().unwrap().iter().map(|s| s["p"].as_str().unwrap()).collect();
    assert!(levels.contains(&"4/1"), "{levels:?}");

    let out = ilf(&["bound", "--t", "0.2", "--T", "0.5"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["bound"], 4);
}

#[test]
fn round_trip_verifies_and_wrong_target_fails() {
    let dir = TempDir::new().unwrap();
    let law = write(&dir, "inv.json", INVARIANT);
    let path = construct_path(&dir, &law, "invariant");
    let csv = dir.path().join("ecdf.csv");

    let out = ilf(&["verify", "--path", s(&path), "--target", s(&law), "--grid", "20000", "--csv", s(&csv)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(fs::read_to_string(&csv).unwrap().starts_with("t,F\n"));

    let wrong = write(
        &dir,
        "wrong.json",
        r#"{"T":"1/2","atoms":{"zero":"1/2"},"density":{"breakpoints":["0","1/2"],"values":[1]}}"#,
    );
    let out = ilf(&["verify", "--path", s(&path), "--target", s(&wrong), "--grid", "20000"]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["comparison"]["pass"], false);
}

#[test]
fn mismatched_horizon_exits_64() {
    let dir = TempDir::new().unwrap();
    let law = write(&dir, "inv.json", INVARIANT);
    let path = construct_path(&dir, &law, "invariant");
    let out = ilf(&["simulate", "--path", s(&path), "--target", s(&law), "--T", "1/3", "--grid", "100"]);
    assert_eq!(code(&out), 64);
}

#[test]
fn invariant_locator_is_uniform_at_horizon_one() {
    let dir = TempDir::new().unwrap();
    let law = write(&dir, "inv.json", INVARIANT);
    let path = construct_path(&dir, &law, "invariant");
    let uniform = write(&dir, "u.json", UNIFORM_DENSITY);
    let out = ilf(&["verify", "--path", s(&path), "--target", s(&uniform), "--grid", "20000"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn monte_carlo_is_reproducible_and_seed_env_wins() {
    let dir = TempDir::new().unwrap();
    let law = write(&dir, "inv.json", INVARIANT);
    let path = construct_path(&dir, &law, "invariant");
    let args = ["simulate", "--path", s(&path), "--T", "1/2", "--mc", "2000", "--seed", "7"];
    let a = ilf(&args);
    let b = ilf(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);

    let env = Command::new(env!("CARGO_BIN_EXE_ilf"))
        .args(args)
        .env("SEED", "11")
        .output()
        .unwrap();
    assert_eq!(json(&env)["manifest"]["seed"], 11);
    assert_ne!(env.stdout, a.stdout);
}

#[test]
fn mix_certificates() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "f.json", UNIFORM_DENSITY);
    let out = ilf(&["mix", "--density", s(&f), "--method", "gap"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["outcome"]["kind"], "gap_corollary");

    let search = ilf(&["mix", "--density", s(&f), "--method", "search", "--n", "16"]);
    assert_eq!(code(&search), 0);
    let oracle = ilf(&["mix", "--density", s(&f), "--method", "oracle", "--n", "6"]);
    assert_eq!(code(&oracle), 0);
}

#[test]
fn decompose_lists_blocks() {
    let dir = TempDir::new().unwrap();
    let law = write(
        &dir,
        "d.json",
        r#"{"T":"1","density":{"breakpoints":["0","1/4","1/2","1"],"values":[2,1,2]}}"#,
    );
    let out = ilf(&["decompose", s(&law)]);
    assert_eq!(code(&out), 0);
    assert!(!json(&out)["blocks"].as_array().unwrap().is_empty());
}
