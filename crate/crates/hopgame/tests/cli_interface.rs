//! Binary-level checks of the command-line interface: exit codes, output
//! files, overrides, and the shipped example scenario.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn exe() -> &'static str {
    env!("CARGO_BIN_EXE_hopgame")
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("..").join("..")
}

fn shipped_scenario() -> PathBuf {
    repo_root().join("scenarios").join("coverage3.json")
}

fn run_cli(args: &[&str]) -> Output {
    Command::new(exe()).args(args).output().unwrap()
}

#[test]
fn shipped_scenario_matches_builtin_example() {
    let text = std::fs::read_to_string(shipped_scenario()).unwrap();
    let parsed = hopgame::cli::config::ScenarioFile::parse(&text).unwrap();
    let builtin = hopgame::cli::config::example_scenario();
    assert_eq!(parsed.config_hash(), builtin.config_hash());
}

#[test]
fn run_writes_trace_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = run_cli(&[
        "run",
        shipped_scenario().to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
        "--steps",
        "3",
    ]);
    assert!(output.status.success(), "{output:?}");

    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,agent_id,x,y,z,action_idx,payoff,swarm_mean_payoff,solver_sweeps,solve_time_s,consensus"
    );
    assert_eq!(lines.count(), 3 * 3);

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["totals"]["steps"], 3);
    assert_eq!(report["totals"]["agents"], 3);
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);

    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("mean payoff"), "stdout: {stdout}");
}

#[test]
fn seed_override_changes_hash_not_flow() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for (out, seed) in [(&out_a, "7"), (&out_b, "8")] {
        let output = run_cli(&[
            "run",
            shipped_scenario().to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
            "--steps",
            "2",
            "--seed",
            seed,
            "--quiet",
        ]);
        assert!(output.status.success());
    }
    let ra: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_a.join("report.json")).unwrap()).unwrap();
    let rb: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_b.join("report.json")).unwrap()).unwrap();
    assert_ne!(ra["config_hash"], rb["config_hash"]);
}

#[test]
fn missing_scenario_file_exits_2() {
    let output = run_cli(&["run", "/nonexistent/scenario.json", "--quiet"]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("cannot read scenario file"), "{stderr}");
}

#[test]
fn malformed_scenario_exits_2_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"agents\": []").unwrap();
    let out = dir.path().join("out");
    let output = run_cli(&[
        "run",
        bad.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn net_stats_is_deterministic_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let mut contents = Vec::new();
    for name in ["x", "y"] {
        let out = dir.path().join(name);
        let output = run_cli(&[
            "net-stats",
            "--spacings",
            "100,400,700",
            "--trials",
            "20",
            "--seed",
            "3",
            "--output",
            out.to_str().unwrap(),
            "--quiet",
        ]);
        assert!(output.status.success());
        contents.push(std::fs::read(out.join("stats.csv")).unwrap());
    }
    assert_eq!(contents[0], contents[1]);
    let text = String::from_utf8(contents[0].clone()).unwrap();
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn oracle_check_passes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_cli(&[
        "oracle-check",
        "--n-games",
        "50",
        "--seed",
        "11",
        "--output",
        dir.path().to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("singleton exactness"), "{stdout}");
    assert!(stdout.contains("PASS"), "{stdout}");

    let csv = std::fs::read_to_string(dir.path().join("oracle.csv")).unwrap();
    assert_eq!(csv.lines().count(), 51);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["flags"]["pass"], true);
}

#[test]
fn oracle_check_guard_exits_2() {
    let output = run_cli(&["oracle-check", "--max-members", "9", "--quiet"]);
    assert_eq!(output.status.code(), Some(2));
    let output = run_cli(&["oracle-check", "--max-actions", "7", "--quiet"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_exits_2() {
    let output = run_cli(&["frobnicate"]);
    assert_eq!(output.status.code(), Some(2));
}
