use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ftbias(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ftbias"))
        .args(args)
        .current_dir(cwd)
        .env_remove("FTBIAS_CONFIG")
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn full_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let sim_cfg = configs().join("simulate.toml");
    let o = ftbias(
        &["simulate", "--config", sim_cfg.to_str().unwrap(), "--duration", "5", "-o", "log.jsonl", "--truth", "truth.jsonl"],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let lines = std::fs::read_to_string(d.join("log.jsonl")).unwrap().lines().count();
    assert_eq!(lines, 1000);

    let o = ftbias(&["estimate", "-i", "log.jsonl", "-o", "est.jsonl", "--stats", "stats.json"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(d.join("est.jsonl")).unwrap().lines().count(), 500);
    let stats: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["estimator"]["estimates"], 500);

    let o = ftbias(&["correct", "--estimates", "est.jsonl", "-i", "log.jsonl", "-o", "corrected.jsonl"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(d.join("corrected.jsonl")).unwrap().lines().count(), 500);

    let o = ftbias(
        &["report", "--estimates", "est.jsonl", "--truth", "truth.jsonl", "--table", "table.csv", "--plot-dir", "plots"],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["truth"]["final_bias_error"].as_array().unwrap().len(), 6);
    let table = std::fs::read_to_string(d.join("table.csv")).unwrap();
    assert!(table.lines().next().unwrap().ends_with("nees"));
    assert!(d.join("plots/bias.svg").exists() && d.join("plots/drift.svg").exists());

    let o = ftbias(&["report", "--estimates", "est.jsonl"], d);
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(summary.get("truth").is_none());
}

#[test]
fn csv_logs_give_the_same_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for out in ["log.jsonl", "log.csv"] {
        let o = ftbias(&["simulate", "--duration", "2", "-o", out], d);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = ftbias(&["estimate", "-i", "log.jsonl"], d);
    let b = ftbias(&["estimate", "-i", "log.csv"], d);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn stdin_and_env_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = ftbias(&["simulate", "--duration", "1"], d);
    let log = o.stdout;
    let run = |env_cfg: Option<&Path>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_ftbias"));
        cmd.args(["estimate"]).current_dir(d).env_remove("FTBIAS_CONFIG");
        if let Some(p) = env_cfg {
            cmd.env("FTBIAS_CONFIG", p);
        }
        let mut child = cmd
            .stdin(std::process::Stdio::piped())
            .stdout(std::process::Stdio::piped())
            .stderr(std::process::Stdio::piped())
            .spawn()
            .unwrap();
        use std::io::Write;
        child.stdin.take().unwrap().write_all(&log).unwrap();
        child.wait_with_output().unwrap()
    };
    let plain = run(None);
    assert!(plain.status.success());
    assert_eq!(String::from_utf8_lossy(&plain.stdout).lines().count(), 100);
    let with_env = run(Some(&configs().join("pipeline.toml")));
    assert_eq!(with_env.stdout, plain.stdout);
    let bad = run(Some(Path::new("/nonexistent/cfg.toml")));
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn empty_input_is_an_empty_stream() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    let o = ftbias(&["estimate", "-i", "empty.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn nan_line_is_a_data_error_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let log = "{\"t\":0.0,\"w\":[0,0,0,0,0,0]}\n{\"t\":0.01,\"w\":[0,0,NaN,0,0,0]}\n";
    std::fs::write(dir.path().join("bad.jsonl"), log).unwrap();
    let o = ftbias(&["estimate", "-i", "bad.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let o = ftbias(&["estimate", "-i", "bad.jsonl", "--malformed", "skip"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn usage_and_config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(ftbias(&["bogus"], d).status.code(), Some(1));
    assert_eq!(ftbias(&[], d).status.code(), Some(1));
    assert_eq!(ftbias(&["--help"], d).status.code(), Some(0));
    assert_eq!(ftbias(&["estimate", "-i", "missing.jsonl"], d).status.code(), Some(1));
    std::fs::write(d.join("bad.toml"), "pairing_tolerance = -1.0\n").unwrap();
    assert_eq!(ftbias(&["estimate", "--config", "bad.toml", "-i", "x"], d).status.code(), Some(1));
    std::fs::write(d.join("log.jsonl"), "").unwrap();
    assert_eq!(ftbias(&["estimate", "-i", "log.jsonl", "--sigma-q", "-1"], d).status.code(), Some(1));
}

#[test]
fn wrong_joint_count_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let log = "{\"t\":0.0,\"q\":[0,0],\"qd\":[0,0]}\n";
    std::fs::write(dir.path().join("log.jsonl"), log).unwrap();
    let o = ftbias(&["estimate", "-i", "log.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
