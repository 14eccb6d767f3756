//! Configuration files, CSV output and run manifests.
//!
//! Configs are JSON. Unknown keys are rejected, defaults are filled in and
//! echoed back through [`RunConfig::materialize`], and a run manifest can be
//! loaded in place of the config that produced it.

use crate::drag::{AuditParams, DragLaw};
use crate::error::{Error, Result};
use crate::experiments::{self, SweepConfig, SweepResult, VerdictThresholds};
use crate::integrator::{self, IntegratorSettings, Trajectory};
use crate::model::{energy, Mode, ModelConfig, SpringParams, State};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const TRAJECTORY_HEADER: &str = "t,h,h_dot,xi,xi_dot,energy,ledger,residual";
pub const SUMMARY_HEADER: &str = "mu,h_min,t_min,rebound_height,dev_h,dev_xi,energy_residual";
pub const DRAG_TABLE_HEADER: &str = "h,alpha,gamma,dim,D_lub,D_analytic,exponent";

pub const DEFAULT_MU: f64 = 0.1;

/// Config file as written by users. Flat model parameters, SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// Shell mass (kg).
    #[serde(rename = "M")]
    pub shell_mass: f64,
    /// Internal mass (kg).
    pub m: f64,
    /// Spring stiffness (N/m).
    pub k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
    /// Explicit drag law; replaces `c1, c2, c3`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drag: Option<DragLaw>,
    /// Initial distance (m) and velocity (m/s, negative toward the wall).
    pub h0: f64,
    pub hdot0: f64,
    #[serde(default)]
    pub xi0: f64,
    #[serde(default)]
    pub xidot0: f64,
    /// Viscosity (Pa s) of a single run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    /// Viscosities of a sweep, strictly decreasing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_values: Option<Vec<f64>>,
    /// End time (s).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit_grid_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<VerdictThresholds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditConfig>,
}

/// Grid and constants of the drag assumption audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub h_min: f64,
    pub h_max: f64,
    pub h_points: usize,
    pub xi_min: f64,
    pub xi_max: f64,
    pub xi_points: usize,
    #[serde(default)]
    pub params: Option<AuditParams>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            h_min: 1e-6,
            h_max: 1.0,
            h_points: 200,
            xi_min: -0.05,
            xi_max: 0.05,
            xi_points: 41,
            params: None,
        }
    }
}

impl AuditConfig {
    pub fn h_grid(&self) -> Vec<f64> {
        log_grid(self.h_min, self.h_max, self.h_points)
    }

    pub fn xi_grid(&self) -> Vec<f64> {
        integrator::uniform_grid(self.xi_min, self.xi_max, self.xi_points).collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.h_min > 0.0 && self.h_max > self.h_min && self.h_max.is_finite()) {
            return Err(Error::validation("audit.h_min", "need 0 < h_min < h_max"));
        }
        if self.h_points < 2 || self.xi_points < 2 {
            return Err(Error::validation("audit.h_points", "grids need at least 2 points"));
        }
        if !(self.xi_max > self.xi_min) {
            return Err(Error::validation("audit.xi_min", "need xi_min < xi_max"));
        }
        Ok(())
    }
}

/// Logarithmically spaced points from `a` to `b` inclusive.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    integrator::uniform_grid(a.ln(), b.ln(), n)
        .enumerate()
        .map(|(i, x)| if i == 0 { a } else if i + 1 == n { b } else { x.exp() })
        .collect()
}

/// A validated config with every default resolved.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub t_end: f64,
    pub mu_values: Option<Vec<f64>>,
    pub audit_grid_size: usize,
    pub integrator: IntegratorSettings,
    pub verdict: VerdictThresholds,
    pub audit: AuditConfig,
}

impl RunConfig {
    /// The sweep described by `mu_values` (default list when absent).
    pub fn sweep(&self) -> Result<SweepConfig> {
        let cfg = SweepConfig {
            base: self.model.clone(),
            mu_values: self.mu_values.clone().unwrap_or_else(|| experiments::DEFAULT_MU_VALUES.to_vec()),
            t_end: self.t_end,
            audit_grid_size: self.audit_grid_size,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Config file with every optional field written out.
    pub fn materialize(&self) -> ConfigFile {
        let s = &self.model.initial;
        ConfigFile {
            shell_mass: self.model.spring.shell_mass,
            m: self.model.spring.internal_mass,
            k: self.model.spring.stiffness,
            c1: None,
            c2: None,
            c3: None,
            drag: Some(self.model.drag.clone()),
            h0: s.h,
            hdot0: s.h_dot,
            xi0: s.xi,
            xidot0: s.xi_dot,
            mu: Some(self.model.mu),
            mode: Some(self.model.mode),
            mu_values: self.mu_values.clone(),
            t_end: Some(self.t_end),
            audit_grid_size: Some(self.audit_grid_size),
            integrator: Some(self.integrator),
            verdict: Some(self.verdict),
            audit: Some(self.audit),
        }
    }
}

impl ConfigFile {
    pub fn resolve(&self) -> Result<RunConfig> {
        let spring = SpringParams::new(self.shell_mass, self.m, self.k)?;
        let coeffs = [("c1", self.c1), ("c2", self.c2), ("c3", self.c3)];
        let drag = match &self.drag {
            Some(d) => {
                if let Some((name, _)) = coeffs.iter().find(|(_, v)| v.is_some()) {
                    return Err(Error::validation(*name, "give either `drag` or c1/c2/c3, not both"));
                }
                d.clone()
            }
            None => {
                let get = |i: usize| {
                    let (name, v) = coeffs[i];
                    v.ok_or_else(|| Error::validation(name, "required unless `drag` is given"))
                };
                DragLaw::PowerLawCoupled {
                    c1: get(0)?,
                    c2: get(1)?,
                    c3: get(2)?,
                    shell_mass: self.shell_mass,
                }
            }
        };
        let model = ModelConfig {
            spring,
            drag,
            mu: self.mu.unwrap_or(DEFAULT_MU),
            initial: State {
                t: 0.0,
                h: self.h0,
                h_dot: self.hdot0,
                xi: self.xi0,
                xi_dot: self.xidot0,
            },
            mode: self.mode.unwrap_or(Mode::Coupled),
        };
        model.validate()?;
        let integrator = self.integrator.unwrap_or_default();
        integrator.validate()?;
        let run = RunConfig {
            model,
            t_end: self.t_end.unwrap_or(experiments::DEFAULT_T_END),
            mu_values: self.mu_values.clone(),
            audit_grid_size: self.audit_grid_size.unwrap_or(experiments::DEFAULT_AUDIT_GRID),
            integrator,
            verdict: self.verdict.unwrap_or_default(),
            audit: self.audit.unwrap_or_default(),
        };
        if !(run.t_end > 0.0 && run.t_end.is_finite()) {
            return Err(Error::validation("t_end", "must be finite and > 0"));
        }
        let th = &run.verdict;
        if !(th.persistent_fraction > 0.0 && th.vanishing_fraction > 0.0 && th.vanishing_fraction < th.persistent_fraction) {
            return Err(Error::validation("verdict", "need 0 < vanishing_fraction < persistent_fraction"));
        }
        run.audit.validate()?;
        if run.mu_values.is_some() {
            run.sweep()?;
        }
        Ok(run)
    }
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

#[derive(Deserialize)]
struct ManifestConfig {
    config: ConfigFile,
}

/// Parses config text; a [`RunManifest`] is accepted too and yields its config echo.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(parse_error)?;
    let is_manifest = value.get("tool").is_some() && value.get("config").is_some();
    // deserialize from the text again so that positions survive in errors
    let file = if is_manifest {
        serde_json::from_str::<ManifestConfig>(text).map_err(parse_error)?.config
    } else {
        serde_json::from_str::<ConfigFile>(text).map_err(parse_error)?
    };
    file.resolve()
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

/// Full-precision decimal rendering: 17 significant digits, enough to
/// recover the exact double.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn push_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(*v));
    }
    out.push('\n');
}

/// Trajectory CSV text: one row per accepted sample.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let cfg = traj.config();
    let f0 = energy(&traj.sample(0).state, cfg);
    let mut out = String::with_capacity(64 * (traj.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in traj.samples() {
        let st = &s.state;
        let e = energy(st, cfg);
        push_row(&mut out, &[st.t, st.h, st.h_dot, st.xi, st.xi_dot, e, s.ledger, e + s.ledger - f0]);
    }
    out
}

pub fn write_trajectory_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    write_text(path, &trajectory_csv(traj))
}

/// Parses numeric CSV with the given header back into rows.
pub fn parse_csv(text: &str, header: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.split('\n');
    let first = lines.next().unwrap_or_default();
    if first != header {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: format!("expected header `{header}`, found `{first}`"),
        });
    }
    let width = header.split(',').count();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
        let row = row.map_err(|e| Error::Parse {
            line: i + 2,
            column: 1,
            message: e.to_string(),
        })?;
        if row.len() != width {
            return Err(Error::Parse {
                line: i + 2,
                column: 1,
                message: format!("expected {width} fields, found {}", row.len()),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// File name of the trajectory of one sweep member.
pub fn trajectory_file_name(mu: f64) -> String {
    format!("traj_mu={mu}.csv")
}

/// Writes one CSV per viscosity, `summary.csv` and `verdict.json`; returns
/// the paths in that order. Failed members get a NaN summary row and no
/// trajectory file.
pub fn write_sweep(sweep: &SweepResult, thresholds: VerdictThresholds, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut paths = Vec::new();
    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    let grid = sweep.config.audit_grid_size;
    for entry in &sweep.entries {
        match entry.complete() {
            Some(traj) => {
                let path = out_dir.join(trajectory_file_name(entry.mu));
                write_trajectory_csv(traj, &path)?;
                paths.push(path);
                let r = experiments::summarize(traj, grid);
                push_row(&mut summary, &[r.mu, r.h_min, r.t_min, r.rebound_height, r.dev_h, r.dev_xi, r.energy_residual]);
            }
            None => {
                let mut row = vec![entry.mu];
                row.extend([f64::NAN; 6]);
                push_row(&mut summary, &row);
            }
        }
    }
    let path = out_dir.join("summary.csv");
    write_text(&path, &summary)?;
    paths.push(path);

    let verdict = if sweep.entries.len() >= 3 {
        serde_json::to_value(experiments::physical_rebound_verdict(sweep, thresholds)?)
    } else {
        serde_json::to_value("inconclusive: fewer than 3 viscosities")
    }
    .expect("verdict serializes");
    let failures: Vec<_> = sweep
        .entries
        .iter()
        .filter_map(|e| e.failure().map(|msg| serde_json::json!({ "mu": e.mu, "failure": msg })))
        .collect();
    let doc = serde_json::json!({ "verdict": verdict, "failures": failures, "label": "finite-sweep proxy for a rebound that persists as mu -> 0" });
    let path = out_dir.join("verdict.json");
    write_text(&path, &(serde_json::to_string_pretty(&doc).expect("json") + "\n"))?;
    paths.push(path);
    Ok(paths)
}

/// One row of the drag table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DragTableRow {
    pub h: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub dim: u8,
    pub d_lub: f64,
    /// Closed form for the ball (`alpha = 1`), NaN otherwise.
    pub d_analytic: f64,
    /// Exponent of `h` in the lubrication drag.
    pub exponent: f64,
}

pub fn drag_table_csv(rows: &[DragTableRow]) -> String {
    let mut out = String::from(DRAG_TABLE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.h),
            fmt_f64(r.alpha),
            fmt_f64(r.gamma),
            r.dim,
            fmt_f64(r.d_lub),
            fmt_f64(r.d_analytic),
            fmt_f64(r.exponent)
        );
    }
    out
}

pub fn write_drag_table(rows: &[DragTableRow], path: &Path) -> Result<()> {
    write_text(path, &drag_table_csv(rows))
}

/// Record of one CLI invocation; loading it as a config reproduces the run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: ConfigFile,
    pub outputs: Vec<String>,
    pub runtime_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig, outputs: &[PathBuf], runtime_seconds: f64) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.materialize(),
            outputs: outputs
                .iter()
                .map(|p| p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned()))
                .collect(),
            runtime_seconds,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &(serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const CANONICAL: &str = r#"{
        "M": 1, "m": 8.2, "k": 10000,
        "c1": 0.1, "c2": 20, "c3": 7.4,
        "h0": 0.3, "hdot0": -0.5, "xi0": 0, "xidot0": 0
    }"#;

    #[test]
    fn canonical_config_parses() {
        let run = parse_config(CANONICAL).unwrap();
        assert_eq!(run.model.mu, DEFAULT_MU);
        assert_eq!(run.t_end, 2.0);
        assert_eq!(run.model.mode, Mode::Coupled);
        assert_eq!(
            run.model.drag,
            DragLaw::PowerLawCoupled { c1: 0.1, c2: 20.0, c3: 7.4, shell_mass: 1.0 }
        );
        assert_eq!(run.integrator, IntegratorSettings::default());
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_config("{\n  \"M\": 1,\n  \"m\": ,\n}").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn unknown_key_rejected_with_position() {
        let text = CANONICAL.replace("\"xi0\": 0", "\"xi0\": 0, \"zeta\": 1");
        assert!(matches!(parse_config(&text), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn validation_errors_name_the_field() {
        let text = CANONICAL.replace("\"h0\": 0.3", "\"h0\": -1");
        assert!(matches!(parse_config(&text), Err(Error::Validation { field, .. }) if field == "h0"));
        let text = CANONICAL.replace("\"xi0\": 0", "\"xi0\": 0, \"mu_values\": [0.01, 0.1]");
        assert!(matches!(parse_config(&text), Err(Error::Validation { field, .. }) if field == "mu_values"));
        let text = CANONICAL.replace("\"c1\": 0.1, ", "");
        assert!(matches!(parse_config(&text), Err(Error::Validation { field, .. }) if field == "c1"));
    }

    #[test]
    fn materialized_config_round_trips() {
        let run = parse_config(CANONICAL).unwrap();
        let text = serde_json::to_string(&run.materialize()).unwrap();
        let again = parse_config(&text).unwrap();
        assert_eq!(again.materialize(), run.materialize());
    }

    #[test]
    fn number_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, f64::MAX, 5e-324, 0.0, -0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn log_grid_endpoints_exact() {
        let g = log_grid(1e-6, 1e-4, 5);
        assert_eq!(g[0], 1e-6);
        assert_eq!(g[4], 1e-4);
        assert!((g[2] - 1e-5).abs() < 1e-18);
    }
}
