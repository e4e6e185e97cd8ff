//! End-to-end runs of the command-line tool.

use std::path::Path;
use std::process::{Command, Output};

fn tool(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stark-packet"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("tool runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn simulate_writes_series_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "red.cfg",
        "packet.delta = 3\npacket.linewidth = 0.9\n",
    );
    let out = tool(&["simulate", "red.cfg", "-o", "run"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("run/series.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10_001 + 1);
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("run/summary.json")).unwrap(),
    )
    .unwrap();
    assert!(summary["summary"]["population_error"].as_f64().unwrap() <= 1e-6);
    assert_eq!(summary["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn repeated_simulate_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "c.cfg",
        "packet.delta = 5\npacket.linewidth = 0.1\ngrid.t_max = 3\n",
    );
    for name in ["a", "b"] {
        assert!(tool(&["simulate", "c.cfg", "-o", name], dir.path())
            .status
            .success());
    }
    let a = std::fs::read(dir.path().join("a/series.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/series.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn absolute_flag_offsets_shift() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "c.cfg",
        "packet.delta = 2\ngrid.t_max = 0.01\noutput.series = shift\n",
    );
    assert!(tool(
        &["simulate", "c.cfg", "-o", "abs", "--absolute"],
        dir.path()
    )
    .status
    .success());
    let csv = std::fs::read_to_string(dir.path().join("abs/series.csv")).unwrap();
    let first: f64 = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(first, 1e6 + 1.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.cfg", "grid.dt = 0\n");
    write(dir.path(), "typo.cfg", "grid.dtt = 0.1\n");
    let bad = tool(&["simulate", "bad.cfg"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("grid.dt"));
    let typo = tool(&["simulate", "typo.cfg"], dir.path());
    assert_eq!(typo.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&typo.stderr).contains("line 1"));
    assert_eq!(
        tool(&["simulate", "missing.cfg"], dir.path()).status.code(),
        Some(3)
    );
    assert_eq!(tool(&["frobnicate"], dir.path()).status.code(), Some(1));
}

#[test]
fn coarse_step_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "coarse.cfg", "grid.dt = 0.2\n");
    let out = tool(&["validate", "--config", "coarse.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let report = String::from_utf8_lossy(&out.stdout);
    let conv = report
        .lines()
        .find(|l| l.contains("RK4 step-halving"))
        .unwrap();
    assert!(conv.starts_with("[FAIL]"), "{conv}");
    // one line per check, each with its statement after the bar
    assert!(report
        .lines()
        .filter(|l| l.starts_with('['))
        .all(|l| l.contains(" | ")));
}

#[test]
fn figures_write_three_files_each() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, header) in [
        ("fig2", "t,shift,valid"),
        ("fig3", "t,diff_dynamic,diff_static"),
    ] {
        let out = tool(&[cmd, "-o", "figs"], dir.path());
        assert!(out.status.success());
        let paths: Vec<String> = String::from_utf8_lossy(&out.stdout)
            .lines()
            .map(str::to_string)
            .collect();
        assert_eq!(paths.len(), 3);
        for p in paths {
            let text = std::fs::read_to_string(dir.path().join(p)).unwrap();
            assert_eq!(text.lines().next(), Some(header));
        }
    }
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "base.cfg", "grid.t_max = 4\n");
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_stark-packet"))
            .args([
                "sweep",
                "base.cfg",
                "--delta",
                "-3:3:3",
                "--linewidth",
                "0.5:2:3",
            ])
            .env("STARK_PACKET_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    let serial = run("1");
    assert_eq!(serial, run("4"));
    assert_eq!(String::from_utf8_lossy(&serial).lines().count(), 10);
}
