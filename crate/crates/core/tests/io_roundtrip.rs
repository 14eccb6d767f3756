//! Output files parse back to the in-memory values.

use fsi_rebound::acceptance::canonical_shell;
use fsi_rebound::experiments::{run_sweep, SweepConfig, VerdictThresholds};
use fsi_rebound::integrator::{integrate, IntegratorSettings};
use fsi_rebound::io::{self, parse_csv, trajectory_file_name, SUMMARY_HEADER, TRAJECTORY_HEADER};
use fsi_rebound::model::energy;

#[test]
fn trajectory_csv_round_trips_bitwise() {
    let cfg = canonical_shell(20.0).with_mu(0.05);
    let traj = integrate(&cfg, 1.0, &IntegratorSettings::default()).unwrap();
    let text = io::trajectory_csv(&traj);
    assert!(text.starts_with(&format!("{TRAJECTORY_HEADER}\n")));
    assert!(!text.contains('\r'));
    let rows = parse_csv(&text, TRAJECTORY_HEADER).unwrap();
    assert_eq!(rows.len(), traj.len());
    for (row, s) in rows.iter().zip(traj.samples()) {
        let st = s.state;
        for (got, want) in row.iter().zip([st.t, st.h, st.h_dot, st.xi, st.xi_dot, energy(&st, &cfg), s.ledger]) {
            assert_eq!(got.to_bits(), want.to_bits());
        }
    }
}

#[test]
fn empty_interval_gives_header_and_initial_row() {
    let cfg = canonical_shell(20.0);
    let traj = integrate(&cfg, 0.0, &IntegratorSettings::default()).unwrap();
    let text = io::trajectory_csv(&traj);
    let rows = parse_csv(&text, TRAJECTORY_HEADER).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][..5], &[0.0, 0.3, -0.5, 0.0, 0.0]);
    assert_eq!(rows[0][7], 0.0);
}

#[test]
fn sweep_writes_one_file_per_viscosity_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let mus = vec![0.1, 0.05, 0.01, 0.005, 0.001];
    let cfg = SweepConfig { t_end: 1.0, ..SweepConfig::new(canonical_shell(20.0), mus.clone()) };
    let sweep = run_sweep(&cfg, &IntegratorSettings::default()).unwrap();
    let paths = io::write_sweep(&sweep, VerdictThresholds::default(), dir.path()).unwrap();
    let csvs: Vec<_> = paths.iter().filter(|p| p.extension().is_some_and(|e| e == "csv")).collect();
    assert_eq!(csvs.len(), 6);
    for mu in &mus {
        assert!(dir.path().join(trajectory_file_name(*mu)).is_file());
    }
    assert!(dir.path().join("traj_mu=0.005.csv").is_file());
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let rows = parse_csv(&summary, SUMMARY_HEADER).unwrap();
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), mus);
    assert!(dir.path().join("verdict.json").is_file());
}
