use std::fs;
use std::process::Command;

fn lenscran() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lenscran"))
}

#[test]
fn runs_a_small_sweep_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    fs::write(&config, "seed = 7\nmodes = [\"lens\"]\n").unwrap();
    let out = dir.path().join("out");
    let status = lenscran()
        .args(["--config", config.to_str().unwrap(), "--sweep", "0.4,inf", "--drops", "1", "--csi", "perfect"])
        .args(["--dump-drops", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let stdout = String::from_utf8(status.stdout).unwrap();
    assert!(stdout.contains("lens") && stdout.contains("inf"));

    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    let lines: Vec<&str> = results.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.4,lens,perfect,") && lines[1].ends_with(",1,7"));
    assert!(lines[2].starts_with("inf,lens,perfect,"));
    assert!(out.join("allocations.csv").exists());
    assert!(out.join("drops/drop-0000.txt").exists());
}

#[test]
fn rejects_bad_arguments() {
    let out = lenscran().args(["--modes", "dish"]).output().unwrap();
    assert!(!out.status.success());
    let out = lenscran().args(["--drops", "0"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("drops"));
}
