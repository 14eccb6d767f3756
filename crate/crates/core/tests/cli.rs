//! End-to-end runs of the `rebound` binary.

use fsi_rebound::drag::analytic_ball;
use fsi_rebound::io::{parse_csv, DRAG_TABLE_HEADER, TRAJECTORY_HEADER};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CANONICAL: &str = r#"{"M": 1, "m": 8.2, "k": 10000, "c1": 0.1, "c2": 20, "c3": 7.4,
  "h0": 0.3, "hdot0": -0.5, "xi0": 0, "xidot0": 0}"#;
const RIGID: &str = r#"{"M": 1, "m": 8.2, "k": 10000, "c1": 0.1, "c2": 0, "c3": 7.4,
  "h0": 0.3, "hdot0": -0.5, "mu": 0.01, "mu_values": [0.1, 0.01, 0.001], "t_end": 1.5}"#;

fn rebound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rebound")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn simulate_rigid_shell_keeps_positive_distance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "rigid.json", RIGID);
    let out = dir.path().join("run");
    let o = rebound(&["simulate", "--config", &cfg, "--t-end", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("traj_mu=0.01.csv")).unwrap();
    let rows = parse_csv(&text, TRAJECTORY_HEADER).unwrap();
    assert_eq!(rows.last().unwrap()[0], 2.0);
    assert!(rows.iter().all(|r| r[1] > 0.0));
    assert!(out.join("manifest.json").is_file());
}

#[test]
fn repeated_runs_are_byte_identical_and_manifest_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "rigid.json", RIGID);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    for out in [&a, &b] {
        assert_eq!(code(&rebound(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()])), 0);
    }
    let manifest = a.join("manifest.json");
    assert_eq!(code(&rebound(&["sweep", "--config", manifest.to_str().unwrap(), "--out", c.to_str().unwrap()])), 0);
    for name in ["traj_mu=0.1.csv", "traj_mu=0.01.csv", "traj_mu=0.001.csv", "summary.csv", "verdict.json"] {
        let first = fs::read(a.join(name)).unwrap();
        assert_eq!(first, fs::read(b.join(name)).unwrap(), "{name}");
        assert_eq!(first, fs::read(c.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn drag_table_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    for dim in ["2", "3"] {
        let out = dir.path().join(format!("drag{dim}.csv"));
        let o = rebound(&[
            "drag-table", "--alpha", "1", "--gamma", "2.5", "--dim", dim, "--h-min", "1e-3", "--h-max", "1e-1",
            "--points", "5", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let rows = parse_csv(&fs::read_to_string(&out).unwrap(), DRAG_TABLE_HEADER).unwrap();
        assert_eq!(rows.len(), 5);
        for r in rows {
            let exact = analytic_ball(0.2, r[0], dim.parse().unwrap()).unwrap();
            assert!((r[4] - exact).abs() / exact <= 1e-6);
            assert_eq!(r[5], exact);
        }
    }
}

#[test]
fn audit_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", CANONICAL);
    let o = rebound(&["audit", "--config", &cfg]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for a in ["D1:", "D2:", "D4:", "D5:", "D6:"] {
        assert!(text.contains(a), "{text}");
    }
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", &CANONICAL.replace("\"h0\": 0.3", "\"h0\": -1"));
    let o = rebound(&["simulate", "--config", &bad, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("h0"));

    let order = write(dir.path(), "order.json", &RIGID.replace("[0.1, 0.01, 0.001]", "[0.01, 0.1, 0.001]"));
    let o = rebound(&["sweep", "--config", &order, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("mu_values"));

    let syntax = write(dir.path(), "syntax.json", "{\n  \"M\": 1,\n  oops\n}");
    let o = rebound(&["simulate", "--config", &syntax, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    assert_eq!(code(&rebound(&["frobnicate"])), 1);
    assert_eq!(code(&rebound(&["simulate", "--bogus"])), 1);
    let o = rebound(&[
        "drag-table", "--alpha", "0.2", "--gamma", "1", "--dim", "3", "--h-min", "1e-3", "--h-max", "1e-1",
        "--points", "3", "--out", dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn verify_catches_broken_ledger() {
    let o = rebound(&["verify", "--only", "2", "--inject-fault", "ledger"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("[FAIL] criterion  2"));
    let o = rebound(&["verify", "--only", "6,9"]);
    assert_eq!(code(&o), 0);
}
