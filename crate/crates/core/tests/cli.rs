use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path, env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qelection"));
    cmd.args(args).arg("--out-dir").arg(out).env_remove("QELECTION_OUT_DIR");
    if let Some(e) = env_out {
        // the explicit flag still wins over the environment
        cmd.env("QELECTION_OUT_DIR", e);
    }
    cmd.output().expect("binary runs")
}

#[test]
fn election_outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["election", "--voters", "5", "--seed", "42"];
    assert_eq!(run(&args, &a, None).status.code(), Some(0));
    assert_eq!(run(&args, &b, Some(&dir.path().join("ignored"))).status.code(), Some(0));
    for f in ["transcript.jsonl", "stats.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(!dir.path().join("ignored").exists());
    let first = fs::read_to_string(a.join("transcript.jsonl")).unwrap();
    let record: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    for key in ["run_id", "phase", "actor", "event", "digest"] {
        assert!(record.get(key).is_some(), "{key}");
    }
}

#[test]
fn env_var_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let status = Command::new(env!("CARGO_BIN_EXE_qelection"))
        .args(["baseline", "--seed", "3"])
        .env("QELECTION_OUT_DIR", &target)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(target.join("stats.csv").exists());
}

#[test]
fn stats_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["attack", "--kind", "forge-ballot", "--trials", "2000", "--seed", "5"], dir.path(), None);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("stats.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("metric,estimate,stderr,closed_form,trials"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 5));
    let row = |name: &str| rows.iter().find(|r| r[0] == name).unwrap();
    assert_eq!(row("forge_accept_m4")[3], "0.0625");
    // no closed form is an empty field, not zero
    assert_eq!(row("forged_code_error_rate")[3], "");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["election", "--l", "2", "--m", "4"], dir.path(), None).status.code(), Some(2));
    assert_eq!(run(&["attack", "--kind", "teleport"], dir.path(), None).status.code(), Some(2));
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "voterz = 3\n").unwrap();
    let args = ["election", "--config", cfg.to_str().unwrap()];
    assert_eq!(run(&args, dir.path(), None).status.code(), Some(2));
    let aborted = run(&["election", "--loss-p", "0.9", "--max-retries", "0"], dir.path(), None);
    assert_eq!(aborted.status.code(), Some(3));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 11\nvoters = 3\ncandidates = [\"X\", \"Y\", \"Z\"]\n").unwrap();
    let out = run(&["election", "--config", cfg.to_str().unwrap()], &dir.path().join("o"), None);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("tally_Z"));
    let total: f64 = stdout
        .lines()
        .filter(|l| l.starts_with("tally_"))
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert_eq!(total, 3.0);
}
