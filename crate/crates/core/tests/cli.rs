use std::process::Command;

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_potdc-bench"))
}

fn tmp(name: &str) -> std::path::PathBuf {
    let d = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&d).unwrap();
    d.join(name)
}

#[test]
fn custom_run_writes_csv_and_svg() {
    let cfg = tmp("small.toml");
    std::fs::write(
        &cfg,
        "num_trials = 2\nsnr_db = [0.0, 10.0]\nmethods = [\"potdc\", \"smi\"]\n",
    )
    .unwrap();
    let (csv, svg) = (tmp("small.csv"), tmp("small.svg"));
    let out = bench()
        .args(["custom", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&csv)
        .arg("--svg")
        .arg(&svg)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 2);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn config_errors_exit_1() {
    assert_eq!(
        bench().arg("custom").output().unwrap().status.code(),
        Some(1)
    );
    let bad = tmp("bad.toml");
    std::fs::write(&bad, "gamma = -2.0\n").unwrap();
    let out = bench()
        .args(["custom", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
    let missing = bench()
        .args(["example1", "--config", "/nonexistent/x.toml"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn selftest_exit_codes() {
    let ok = bench()
        .args(["selftest", "--level", "quick"])
        .output()
        .unwrap();
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stdout)
    );
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 6);
    let bad = bench()
        .args(["selftest", "--level", "quick", "--inject-fault"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
