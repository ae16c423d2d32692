use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qmpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmpc")).args(args).output().expect("spawn qmpc")
}

fn example() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/example.cfg")
}

fn write_cfg(dir: &TempDir, text: &str) -> PathBuf {
    let p = dir.path().join("run.cfg");
    fs::write(&p, text).unwrap();
    p
}

fn metrics(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap()
}

#[test]
fn bundled_example_passes() {
    let out = TempDir::new().unwrap();
    let o = qmpc(&["run", "--config", example().to_str().unwrap(), "--out-dir", out.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = metrics(out.path());
    assert_eq!(m["passed"], true);
    assert_eq!(m["config"]["players"], 8);
    assert_eq!(m["config"]["prime"], 101);
    let reps = m["repetitions"].as_array().unwrap();
    assert_eq!(reps.len(), 3);
    for r in reps {
        // the circuit on the committed inputs, evaluated here by hand
        let x: Vec<u64> = r["committed_inputs"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
        let want = (x[0] + x[1] + x[2] + x[3]) * ((x[4] + x[5]) * (x[6] * x[7]) % 101) % 101;
        assert_eq!(r["expected"].as_u64().unwrap(), want);
        assert!(r["summary"]["max_messages"].as_u64().unwrap() > 0);
    }
    let log = fs::read_to_string(out.path().join("transcript.log")).unwrap();
    assert!(log.lines().count() > 100);
}

#[test]
fn seed_flag_overrides_and_runs_are_deterministic() {
    let out = TempDir::new().unwrap();
    let cfg = example();
    let args = ["run", "--config", cfg.to_str().unwrap(), "--seed", "40", "--out-dir", out.path().to_str().unwrap()];
    assert!(qmpc(&args).status.success());
    let first = fs::read(out.path().join("metrics.json")).unwrap();
    let log = fs::read(out.path().join("transcript.log")).unwrap();
    assert!(qmpc(&args).status.success());
    assert_eq!(first, fs::read(out.path().join("metrics.json")).unwrap());
    assert_eq!(log, fs::read(out.path().join("transcript.log")).unwrap());
    assert_eq!(metrics(out.path())["repetitions"][1]["seed"], 41);
}

#[test]
fn large_bad_fraction_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(&dir, "players = 16\nbad_fraction = 0.4\n");
    let o = qmpc(&["run", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("run.cfg") && err.contains("bad fraction"), "{err}");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn errors_name_file_and_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(&dir, "players = 8\n\nprime = many\n");
    let o = qmpc(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("run.cfg:3"));

    fs::write(dir.path().join("bad.circuit"), "input 1\ngate 1 nand x1 x1\noutput g1\n").unwrap();
    let cfg = write_cfg(&dir, "players = 8\ncircuit = bad.circuit\n");
    let o = qmpc(&["run", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.circuit") && err.contains("line 2"), "{err}");
}

#[test]
fn fifty_honest_repetitions() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(&dir, "players = 8\ngates = 8\nprime = 101\nrepetitions = 50\ntranscript = false\n");
    let o = qmpc(&["run", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let m = metrics(dir.path());
    assert_eq!(m["repetitions"].as_array().unwrap().len(), 50);
    assert_eq!(m["failures"], 0);
}

#[test]
fn failed_runs_set_exit_status() {
    // quorums of four, two bad players and no formation retries: some run
    // puts both bad players in one quorum and cannot proceed
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(
        &dir,
        "players = 8\ngates = 4\nprime = 101\nquorum_size = 4\nbad_players = 0,1\nformation_retries = 0\nrepetitions = 20\n",
    );
    let o = qmpc(&["run", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let m = metrics(dir.path());
    assert_eq!(m["passed"], false);
    assert!(m["repetitions"].as_array().unwrap().iter().any(|r| r["verdict"] == "aborted"));
}

#[test]
fn sweep_writes_one_row_per_value_and_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(&dir, "players = 8\ngates = 8\nprime = 101\nrepetitions = 2\nbad_fraction = 0.125\nadversary = garbage\nformation_retries = 1000\n");
    let o = qmpc(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--axis",
        "m",
        "--values",
        "8,16",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("axis_value,seed,max_messages,median_messages,max_field_ops"));
    assert_eq!(lines.len(), 1 + 4);
    assert!(lines[1..].iter().all(|l| l.contains(",correct,")));
    let m = metrics(dir.path());
    assert_eq!(m["axis"], "m");
    assert_eq!(m["points"][1]["config"]["gates"], 16);
    assert!(dir.path().join("transcript.log").exists());
}

#[test]
fn sweep_rejects_invalid_points_up_front() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(&dir, "players = 8\nprime = 101\n");
    let out = dir.path().join("o");
    let o = qmpc(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--axis",
        "bad-fraction",
        "--values",
        "0,0.5",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    assert_ne!(qmpc(&["sweep", "--config", cfg.to_str().unwrap(), "--axis", "q", "--values", "1"]).status.code(), Some(0));
}
