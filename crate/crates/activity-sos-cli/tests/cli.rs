use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).display().to_string()
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_activity-sos")).args(args).env_remove("ACTIVITY_SOS_JOBS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn validate_accepts_fixtures() {
    let o = cli(&["validate", &fixture("fork_example.json")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("ok"));
    let o = cli(&["validate", &fixture("sync_call.json"), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["clean"], true);
}

#[test]
fn validate_rejects_malformed_models() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"activities":[{"name":"a","nodes":[{"id":"I","kind":"initial"},{"id":"F","kind":"fork"}],
            "edges":[{"from":"F","to":"I"}]}]}"#,
    )
    .unwrap();
    let o = cli(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = cli(&["explore", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_and_io_errors_exit_2() {
    assert_eq!(cli(&["explore"]).status.code(), Some(2));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cli(&["validate", "/nonexistent/model.json"]).status.code(), Some(2));
    assert_eq!(cli(&["explore", &fixture("fork_example.json"), "--mode", "sideways"]).status.code(), Some(2));
    assert_eq!(cli(&["explore", &fixture("fork_example.json"), "--profile", "bogus"]).status.code(), Some(2));
    assert_eq!(cli(&["check", &fixture("contention.json"), "--abstract", "reference"]).status.code(), Some(2));
}

#[test]
fn explore_emits_json_and_dot() {
    let o = cli(&["explore", &fixture("fork_example.json"), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["states"].as_array().unwrap().len(), 12);
    assert_eq!(v["transitions"].as_array().unwrap().len(), 15);
    let o = cli(&["explore", &fixture("fork_example.json"), "--mode", "complete", "--format", "dot"]);
    let dot = stdout(&o);
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("A-F"));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k.dot");
    let o = cli(&["explore", &fixture("fork_example.json"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("digraph"));
}

#[test]
fn explore_output_is_independent_of_worker_count() {
    for name in ["fork_example.json", "contention.json", "parallel2.json", "decision_merge.json", "sync_call.json", "single_action.json"] {
        for mode in ["reduced", "complete"] {
            let one = cli(&["explore", &fixture(name), "--jobs", "1", "--mode", mode, "--dump-states"]);
            let eight = cli(&["explore", &fixture(name), "--jobs", "8", "--mode", mode, "--dump-states"]);
            assert_eq!(one.status.code(), Some(0));
            assert_eq!(one.stdout, eight.stdout, "{name} {mode}");
        }
    }
}

#[test]
fn jobs_can_come_from_the_environment() {
    let base = cli(&["explore", &fixture("contention.json"), "--jobs", "1"]);
    let env = Command::new(env!("CARGO_BIN_EXE_activity-sos"))
        .args(["explore", &fixture("contention.json")])
        .env("ACTIVITY_SOS_JOBS", "4")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(0));
    assert_eq!(base.stdout, env.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_activity-sos"))
        .args(["explore", &fixture("contention.json")])
        .env("ACTIVITY_SOS_JOBS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"profile": "var2", "format": "dot", "mode": "reduced"}"#).unwrap();
    let from_cfg = cli(&["--config", cfg.to_str().unwrap(), "explore", &fixture("contention.json")]);
    let explicit = cli(&["explore", &fixture("contention.json"), "--profile", "var2", "--format", "dot"]);
    assert_eq!(from_cfg.status.code(), Some(0));
    assert_eq!(from_cfg.stdout, explicit.stdout);
    // Flags win over the config file.
    let flag = cli(&["--config", cfg.to_str().unwrap(), "explore", &fixture("contention.json"), "--format", "json"]);
    assert!(stdout(&flag).trim_start().starts_with('{'));
    std::fs::write(&cfg, "[1, 2]").unwrap();
    assert_eq!(cli(&["--config", cfg.to_str().unwrap(), "validate", &fixture("fork_example.json")]).status.code(), Some(2));
}

#[test]
fn check_reports_simulation_verdicts() {
    let o = cli(&["check", &fixture("contention.json"), "--abstract", "reference", "--concrete", "var1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("simulation holds"));

    let o = cli(&["check", &fixture("contention.json"), "--abstract", "var1", "--concrete", "reference", "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["holds"], false);
    let ce: Vec<&str> = v["counterexample"].as_array().unwrap().iter().map(|l| l.as_str().unwrap()).collect();
    assert!(ce.contains(&"i(C)"));

    let o = cli(&["check", &fixture("contention.json"), "--abstract", "reference", "--concrete", "var2", "--hide-tau"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("counterexample"));
}

#[test]
fn timed_profiles_need_a_table() {
    let o = cli(&["explore", &fixture("single_action.json"), "--profile", "time"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cli(&[
        "explore",
        &fixture("parallel2.json"),
        "--profile",
        "single-core+time",
        "--timing",
        &fixture("timing_parallel.json"),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("exeTime(B)"));
}

#[test]
fn simulate_is_reproducible() {
    let run = |seed: &str| cli(&["simulate", &fixture("contention.json"), "--seed", seed, "--format", "json"]);
    let a = run("7");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, run("7").stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert!(!v["steps"].as_array().unwrap().is_empty());
    let text = cli(&["simulate", &fixture("single_action.json"), "--max-len", "2"]);
    assert_eq!(stdout(&text).lines().count(), 2);
}
