//! The `decay` binary: exit codes, caches and output files.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn decay(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_decay")).args(args).current_dir(dir).output().expect("decay runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn poles_writes_a_stable_cache() {
    let dir = tempfile::tempdir().unwrap();
    let out = decay(&["poles", "--preset", "fig1", "--n-poles", "5", "--cache", "c"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("1,3.1105268272"));
    let files: Vec<_> = fs::read_dir(dir.path().join("c")).unwrap().collect();
    assert_eq!(files.len(), 1);
    let path = files[0].as_ref().unwrap().path();
    let first = fs::read_to_string(&path).unwrap();
    assert_eq!(code(&decay(&["poles", "--preset", "fig1", "--n-poles", "5", "--cache", "c"], dir.path())), 0);
    assert_eq!(fs::read_to_string(&path).unwrap(), first);
}

#[test]
fn tampered_cache_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["poles", "--preset", "fig1", "--n-poles", "3", "--cache", "c"];
    assert_eq!(code(&decay(&args, dir.path())), 0);
    let path = fs::read_dir(dir.path().join("c")).unwrap().next().unwrap().unwrap().path();
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, text.replace("\n2,6.2", "\n2,6.3")).unwrap();
    let out = decay(&args, dir.path());
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn invalid_input_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&decay(&["run", "--preset", "fig1", "--n-poles", "0"], dir.path())), 2);
    assert_eq!(code(&decay(&["run"], dir.path())), 2);
    assert_eq!(code(&decay(&["run", "--preset", "fig9"], dir.path())), 2);
    fs::write(dir.path().join("bad.json"), r#"{"n_poles": 10, "colour": "red"}"#).unwrap();
    assert_eq!(code(&decay(&["run", "--preset", "fig1", "--config", "bad.json"], dir.path())), 2);
    fs::write(dir.path().join("neg.json"), r#"{"positions": -1.0}"#).unwrap();
    assert_eq!(code(&decay(&["run", "--preset", "fig1", "--config", "neg.json"], dir.path())), 2);
}

#[test]
fn run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"time_grid": [{"start": 0.5, "end": 50.0, "points": 200, "spacing": "log"}], "n_poles": 50}"#;
    fs::write(dir.path().join("small.json"), config).unwrap();
    let args = |out: &'static str| ["run", "--preset", "fig2", "--config", "small.json", "--out", out];
    assert_eq!(code(&decay(&args("a"), dir.path())), 0);
    assert_eq!(code(&decay(&args("b"), dir.path())), 0);
    for name in ["fig2_symmetric.csv", "fig2_antisymmetric.csv", "fig2.gp", "fig2_summary.json"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert!(!a.is_empty() && a == b, "{name} differs between runs");
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("a/fig2_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["n_poles"], 50);
}

#[test]
fn sumrule_approaches_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = decay(&["sumrule", "--preset", "fig2", "--n-poles", "200"], dir.path());
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let last: Vec<&str> = text.lines().filter(|l| l.starts_with("1,200,")).collect();
    assert_eq!(last.len(), 1, "{text}");
    let sum: f64 = last[0].split(',').nth(2).unwrap().parse().unwrap();
    assert!((sum - 1.0).abs() < 1e-5, "{sum}");
    assert!(text.lines().any(|l| l.starts_with("6,200,")));
}
