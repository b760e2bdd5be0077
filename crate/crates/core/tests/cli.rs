use std::path::Path;
use std::process::{Command, Output};

const EXE: &str = env!("CARGO_BIN_EXE_bosonic-ldp");

fn config(name: &str) -> String {
    format!("{}/configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(EXE).args(args).arg("--out").arg(out).output().unwrap()
}

#[test]
fn every_run_subcommand_succeeds_on_reference() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["hartree-run", "fluctuation-run", "oracle-run", "compare"] {
        let out = run(&[cmd, &config("reference.toml")], dir.path());
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let record: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join(format!("{cmd}.json"))).unwrap()).unwrap();
        assert_eq!(record["status"], "ok");
    }
}

#[test]
fn free_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["compare", &config("free.toml")], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_config_exits_two_and_records() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[grid]\npoints = 7\nlength = 1.0\n").unwrap();
    let out = run(&["compare", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let text = std::fs::read_to_string(dir.path().join("compare.json")).unwrap();
    assert!(text.contains("config-error"));

    let missing = run(&["oracle-run", "/nonexistent/config.toml"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn self_test_passes_and_names_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(&["self-test"], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));

    let bad = run(&["self-test", "--corrupt", "k2-symmetry"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&bad.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("FAIL") && l.contains("k2-symmetry")));
    let text = std::fs::read_to_string(dir.path().join("self-test.json")).unwrap();
    assert!(text.contains("invariant-failure"));
}
