use clap::{Parser, Subcommand, ValueEnum};
use fsi_rebound::acceptance::{self, Fault, SuiteOptions};
use fsi_rebound::drag::{self, BodyGeometry};
use fsi_rebound::experiments::run_sweep;
use fsi_rebound::integrator::{self, Termination};
use fsi_rebound::io::{self, DragTableRow, RunManifest};
use fsi_rebound::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const EXIT_INPUT: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_SUITE: u8 = 3;

/// Spring-mass shell near a wall: simulation, sweeps, drag tables and checks.
#[derive(Parser)]
#[command(name = "rebound", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write its trajectory CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// End time in seconds; overrides `t_end` of the config.
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the viscosity sweep of a configuration.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate the lubrication drag on a log-spaced distance grid.
    DragTable {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        dim: u8,
        #[arg(long)]
        h_min: f64,
        #[arg(long)]
        h_max: f64,
        #[arg(long)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the drag law of a configuration against the assumptions.
    Audit {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the acceptance property suite.
    Verify {
        /// Criteria to run, e.g. `--only 1,6,7`.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u8>>,
        #[arg(long, hide = true)]
        inject_fault: Option<FaultArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    Ledger,
}

enum Failure {
    Error(Error),
    Numerical(String),
    Suite,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. }
        | Error::Validation { .. }
        | Error::Io { .. }
        | Error::DivergentIntegral { .. }
        | Error::UndefinedT0 { .. } => EXIT_INPUT,
        Error::NonpositiveDistance { .. }
        | Error::Overflow { .. }
        | Error::QuadratureFailure { .. }
        | Error::StepFailure { .. } => EXIT_NUMERICAL,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
        Err(Failure::Suite) => ExitCode::from(EXIT_SUITE),
    }
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate { config, t_end, out } => simulate(&config, t_end, &out),
        Command::Sweep { config, out } => sweep(&config, &out),
        Command::DragTable { alpha, gamma, dim, h_min, h_max, points, out } => {
            drag_table(alpha, gamma, dim, (h_min, h_max), points, &out)
        }
        Command::Audit { config } => {
            let cfg = io::load_config(&config)?;
            let params = cfg.audit.params.unwrap_or_default();
            let report = drag::assumption_audit(&cfg.model.drag, &cfg.audit.h_grid(), &cfg.audit.xi_grid(), &params);
            print!("{report}");
            Ok(())
        }
        Command::Verify { only, inject_fault } => {
            let opts = SuiteOptions {
                only,
                fault: inject_fault.map(|FaultArg::Ledger| Fault::Ledger),
            };
            let report = acceptance::run_suite(&opts);
            println!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Suite)
            }
        }
    }
}

fn simulate(config: &Path, t_end: Option<f64>, out: &Path) -> Result<(), Failure> {
    let start = Instant::now();
    let mut cfg = io::load_config(config)?;
    if let Some(t) = t_end {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Validation { field: "t-end".into(), constraint: "must be finite and >= 0".into() }.into());
        }
        cfg.t_end = t;
    }
    let traj = integrator::integrate(&cfg.model, cfg.t_end, &cfg.integrator)?;
    for w in traj.warnings() {
        eprintln!("warning: {w:?}");
    }
    let path = out.join(io::trajectory_file_name(cfg.model.mu));
    io::write_trajectory_csv(&traj, &path)?;
    let outputs = [path];
    RunManifest::new(&command_line(), &cfg, &outputs, start.elapsed().as_secs_f64()).write(&out.join("manifest.json"))?;
    let h_min = traj.samples().map(|s| s.state.h).fold(f64::INFINITY, f64::min);
    println!("{}: {} steps, min h = {h_min:e}", outputs[0].display(), traj.stats().accepted);
    if let Termination::Failure(e) = traj.termination() {
        return Err(Failure::Numerical(format!("integration stopped at t = {}: {e}", traj.t_end())));
    }
    Ok(())
}

fn sweep(config: &Path, out: &Path) -> Result<(), Failure> {
    let start = Instant::now();
    let cfg = io::load_config(config)?;
    let sweep = run_sweep(&cfg.sweep()?, &cfg.integrator)?;
    let outputs = io::write_sweep(&sweep, cfg.verdict, out)?;
    RunManifest::new(&command_line(), &cfg, &outputs, start.elapsed().as_secs_f64()).write(&out.join("manifest.json"))?;
    for p in &outputs {
        println!("{}", p.display());
    }
    let failed: Vec<String> = sweep
        .entries
        .iter()
        .filter_map(|e| e.failure().map(|f| format!("mu = {}: {f}", e.mu)))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(failed.join("; ")))
    }
}

/// Quadrature tolerance for tabulated drag values.
const TABLE_QUAD_TOL: f64 = 1e-10;

fn drag_table(alpha: f64, gamma: f64, dim: u8, (h_min, h_max): (f64, f64), points: usize, out: &Path) -> Result<(), Failure> {
    let geom = BodyGeometry::new(alpha, gamma, dim)?;
    if !(h_min > 0.0 && h_max >= h_min && h_max.is_finite()) {
        return Err(Error::Validation { field: "h-min".into(), constraint: "need 0 < h-min <= h-max".into() }.into());
    }
    if points == 0 || (points == 1 && h_min != h_max) {
        return Err(Error::Validation { field: "points".into(), constraint: "need at least 2 points for a range".into() }.into());
    }
    let hs = if points == 1 { vec![h_min] } else { io::log_grid(h_min, h_max, points) };
    let exponent = drag::lubrication_exponent(&geom);
    let rows = hs
        .into_iter()
        .map(|h| {
            let d_analytic = if alpha == 1.0 { drag::analytic_ball(0.5 / gamma, h, dim)? } else { f64::NAN };
            Ok(DragTableRow {
                h,
                alpha,
                gamma,
                dim,
                d_lub: drag::lubrication_shape_factor(&geom, h, TABLE_QUAD_TOL)?,
                d_analytic,
                exponent,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    io::write_drag_table(&rows, out)?;
    println!("{}: {} rows", out.display(), rows.len());
    Ok(())
}
