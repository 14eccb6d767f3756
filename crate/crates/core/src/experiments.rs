//! Viscosity sweeps and the post-processing run on them: limit profiles of
//! the vanishing-viscosity problem, sup-norm deviations, turning points of
//! the clamped oscillator, rebound detection and the rebound verdict.

use crate::error::{Error, Result};
use crate::integrator::events::{self, directed_crossings};
use crate::integrator::{self, Component, EnergyResidual, IntegratorSettings, Trajectory};
use crate::model::{spring_energy, ModelConfig, SpringParams};
use crate::quadrature::{self, QuadSettings};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

pub const DEFAULT_MU_VALUES: [f64; 5] = [0.1, 0.05, 0.01, 0.005, 0.001];
pub const DEFAULT_T_END: f64 = 2.0;
pub const DEFAULT_AUDIT_GRID: usize = 10_000;
/// Offset after `t0` where the post-contact comparison window opens.
pub const POST_CONTACT_OFFSET: f64 = 0.05;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Template run; its `mu` is replaced by each entry of `mu_values`.
    pub base: ModelConfig,
    pub mu_values: Vec<f64>,
    pub t_end: f64,
    pub audit_grid_size: usize,
}

impl SweepConfig {
    pub fn new(base: ModelConfig, mu_values: Vec<f64>) -> Self {
        SweepConfig {
            base,
            mu_values,
            t_end: DEFAULT_T_END,
            audit_grid_size: DEFAULT_AUDIT_GRID,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.mu_values.len() < 2 {
            return Err(Error::validation("mu_values", "at least 2 entries required"));
        }
        if self.mu_values.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::validation("mu_values", "entries must be finite and > 0"));
        }
        if self.mu_values.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::validation("mu_values", "entries must be strictly decreasing"));
        }
        if !(self.t_end > self.base.initial.t && self.t_end.is_finite()) {
            return Err(Error::validation("t_end", "must be finite and after the initial time"));
        }
        if self.audit_grid_size < 2 {
            return Err(Error::validation("audit_grid_size", "must be >= 2"));
        }
        Ok(())
    }
}

/// How the trajectories of a sweep are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Data-parallel over `mu`; sequential when built without the `parallel` feature.
    #[default]
    Parallel,
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub mu: f64,
    /// `Err` only when the per-`mu` configuration is rejected; numerical
    /// breakdown shows up as an incomplete trajectory.
    pub outcome: Result<Trajectory>,
}

impl SweepEntry {
    /// The trajectory if it ran to completion.
    pub fn complete(&self) -> Option<&Trajectory> {
        self.outcome.as_ref().ok().filter(|t| t.is_complete())
    }

    pub fn failure(&self) -> Option<String> {
        match &self.outcome {
            Err(e) => Some(e.to_string()),
            Ok(t) => match t.termination() {
                integrator::Termination::Failure(e) => Some(e.to_string()),
                _ => None,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub settings: IntegratorSettings,
    /// In the order of `config.mu_values`.
    pub entries: Vec<SweepEntry>,
}

pub fn run_sweep(cfg: &SweepConfig, settings: &IntegratorSettings) -> Result<SweepResult> {
    run_sweep_with(cfg, settings, Execution::default())
}

pub fn run_sweep_with(cfg: &SweepConfig, settings: &IntegratorSettings, exec: Execution) -> Result<SweepResult> {
    cfg.validate()?;
    settings.validate()?;
    let run = |&mu: &f64| SweepEntry {
        mu,
        outcome: integrator::integrate(&cfg.base.with_mu(mu), cfg.t_end, settings),
    };
    let entries = match exec {
        Execution::Sequential => cfg.mu_values.iter().map(run).collect(),
        Execution::Parallel => parallel_map(&cfg.mu_values, run),
    };
    Ok(SweepResult {
        config: cfg.clone(),
        settings: *settings,
        entries,
    })
}

#[cfg(feature = "parallel")]
fn parallel_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, U>(items: &[T], f: impl Fn(&T) -> U) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Limit of the shell motion as `mu -> 0`: hit the wall at `t0` and stick,
/// the internal mass then oscillating against the clamped shell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitProfiles {
    pub h0: f64,
    pub hdot0: f64,
    pub t0: f64,
    /// `sqrt(a k / M) = sqrt(k / m)`.
    pub omega: f64,
}

impl LimitProfiles {
    pub fn new(p: &SpringParams, h0: f64, hdot0: f64) -> Result<Self> {
        if !(hdot0 < 0.0) {
            return Err(Error::UndefinedT0 { hdot0 });
        }
        if !(p.stiffness > 0.0) {
            return Err(Error::validation("k", "limit oscillation needs k > 0"));
        }
        Ok(LimitProfiles {
            h0,
            hdot0,
            t0: -h0 / hdot0,
            omega: p.clamped_frequency(),
        })
    }

    pub fn for_config(cfg: &ModelConfig) -> Result<Self> {
        LimitProfiles::new(&cfg.spring, cfg.initial.h, cfg.initial.h_dot)
    }

    /// `H(t) = max(0, h0 + hdot0 t)`.
    pub fn h_limit(&self, t: f64) -> f64 {
        (self.h0 + self.hdot0 * t).max(0.0)
    }

    pub fn xi_limit(&self, t: f64) -> f64 {
        if t <= self.t0 {
            0.0
        } else {
            -self.hdot0 / self.omega * (self.omega * (t - self.t0)).sin()
        }
    }

    pub fn xi_dot_limit(&self, t: f64) -> f64 {
        if t <= self.t0 {
            0.0
        } else {
            -self.hdot0 * (self.omega * (t - self.t0)).cos()
        }
    }
}

/// Closed-form limit elongation sampled on `t_grid`.
pub fn xi_limit_solve(p: &SpringParams, h0: f64, hdot0: f64, t_grid: &[f64]) -> Result<Vec<f64>> {
    let lp = LimitProfiles::new(p, h0, hdot0)?;
    Ok(t_grid.iter().map(|&t| lp.xi_limit(t)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deviation {
    pub dev_h: f64,
    pub dev_xi: f64,
}

/// Sup-norm distance of the run from the limit profiles over `[a, b]`,
/// sampled on `grid` uniformly spaced points of the dense output.
pub fn limit_deviation(traj: &Trajectory, profiles: &LimitProfiles, interval: (f64, f64), grid: usize) -> Deviation {
    let (a, b) = interval;
    let mut dev = Deviation { dev_h: 0.0, dev_xi: 0.0 };
    if !(b >= a) {
        return dev;
    }
    for t in integrator::uniform_grid(a, b, grid) {
        let s = traj.interpolate(t);
        dev.dev_h = dev.dev_h.max((s.h - profiles.h_limit(t)).abs());
        dev.dev_xi = dev.dev_xi.max((s.xi - profiles.xi_limit(t)).abs());
    }
    dev
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TurningPoints {
    pub y_minus: f64,
    pub y_plus: f64,
    pub t_minus: f64,
    pub t_plus: f64,
}

/// Turning points of the clamped oscillator launched at speed `|hdot0|` and
/// the travel times out to them and back.
pub fn turning_points(p: &SpringParams, hdot0: f64) -> Result<TurningPoints> {
    if !(p.stiffness > 0.0) {
        return Err(Error::validation("k", "turning points need k > 0"));
    }
    if hdot0 == 0.0 || !hdot0.is_finite() {
        return Err(Error::validation("hdot0", "must be finite and nonzero"));
    }
    let a = p.mass_ratio();
    // 2 a B(y) = hdot0^2 with B quadratic
    let y_plus = hdot0.abs() * (p.shell_mass / (a * p.stiffness)).sqrt();
    let travel = |y_end: f64| -> Result<f64> {
        // y = y_end sin^2(theta) removes the inverse square root at the turning point
        let g = |theta: f64| {
            let (s, c) = theta.sin_cos();
            let y = y_end * s * s;
            let gap = hdot0 * hdot0 - 2.0 * a * spring_energy(y, p);
            2.0 * y_end * s * c / gap.max(0.0).sqrt()
        };
        let q = quadrature::integrate(g, 0.0, FRAC_PI_2, QuadSettings::relative(1e-12))?;
        Ok(2.0 * q.value.abs())
    };
    Ok(TurningPoints {
        y_minus: -y_plus,
        y_plus,
        t_minus: travel(-y_plus)?,
        t_plus: travel(y_plus)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReboundReport {
    pub rebounded: bool,
    pub t_min: f64,
    pub h_min: f64,
    pub max_post_min_h: f64,
    pub t_of_max: f64,
    /// `max_post_min_h - h_min`.
    pub rebound_height: f64,
}

/// Rebound after the minimum distance: `h` must climb above
/// `h_min + max(h_floor_fraction h0, 10 abs_tol)`.
pub fn detect_rebound(traj: &Trajectory, h_floor_fraction: f64) -> ReboundReport {
    let min = events::min_distance(traj);
    let (t_min, h_min) = (min.t, min.state.h);
    let mut best = (h_min, t_min);
    for s in traj.samples().filter(|s| s.state.t > t_min) {
        if s.state.h > best.0 {
            best = (s.state.h, s.state.t);
        }
    }
    for (t, rising) in directed_crossings(traj, Component::HDot, 0.0) {
        if !rising && t > t_min {
            let h = traj.component_at(t, Component::H);
            if h > best.0 {
                best = (h, t);
            }
        }
    }
    let h0 = traj.sample(0).state.h;
    let threshold = h_min + (h_floor_fraction * h0).max(10.0 * traj.settings().abs_tol);
    ReboundReport {
        rebounded: best.0 > threshold,
        t_min,
        h_min,
        max_post_min_h: best.0,
        t_of_max: best.1,
        rebound_height: best.0 - h_min,
    }
}

/// Thresholds of the finite-sweep proxy for a rebound that survives `mu -> 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictThresholds {
    /// Heights of the two smallest `mu` above this fraction of `h0`: physical.
    pub persistent_fraction: f64,
    /// Decreasing trend and final height below this fraction of `h0`: not physical.
    pub vanishing_fraction: f64,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        VerdictThresholds {
            persistent_fraction: 0.1,
            vanishing_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictOutcome {
    Physical,
    NotPhysical,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub outcome: VerdictOutcome,
    /// `(mu, rebound height)` of the completed runs, in sweep order.
    pub heights: Vec<(f64, f64)>,
    /// Least-squares slope of height against position in the sweep.
    pub trend: f64,
    pub h0: f64,
    pub thresholds: VerdictThresholds,
}

impl Verdict {
    pub fn physical(&self) -> Option<bool> {
        match self.outcome {
            VerdictOutcome::Physical => Some(true),
            VerdictOutcome::NotPhysical => Some(false),
            VerdictOutcome::Inconclusive => None,
        }
    }
}

pub fn physical_rebound_verdict(sweep: &SweepResult, thresholds: VerdictThresholds) -> Result<Verdict> {
    if sweep.entries.len() < 3 {
        return Err(Error::validation("mu_values", "a verdict needs at least 3 viscosities"));
    }
    let h0 = sweep.config.base.initial.h;
    let heights: Vec<(f64, f64)> = sweep
        .entries
        .iter()
        .filter_map(|e| e.complete().map(|t| (e.mu, detect_rebound(t, 0.0).rebound_height)))
        .collect();
    Ok(verdict_from_heights(heights, h0, thresholds, sweep.entries.len()))
}

fn verdict_from_heights(heights: Vec<(f64, f64)>, h0: f64, thresholds: VerdictThresholds, expected: usize) -> Verdict {
    let trend = linear_trend(&heights.iter().map(|&(_, v)| v).collect::<Vec<_>>());
    let mut outcome = VerdictOutcome::Inconclusive;
    if heights.len() == expected && heights.len() >= 3 {
        let n = heights.len();
        let tail = [heights[n - 2].1, heights[n - 1].1];
        if tail.iter().all(|&v| v > thresholds.persistent_fraction * h0) {
            outcome = VerdictOutcome::Physical;
        } else if trend < 0.0 && tail[1] < thresholds.vanishing_fraction * h0 {
            outcome = VerdictOutcome::NotPhysical;
        }
    }
    Verdict {
        outcome,
        heights,
        trend,
        h0,
        thresholds,
    }
}

fn linear_trend(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    if v.len() < 2 {
        return 0.0;
    }
    let mx = (n - 1.0) / 2.0;
    let my = v.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &y) in v.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// One row of the sweep summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryRow {
    pub mu: f64,
    pub h_min: f64,
    pub t_min: f64,
    pub rebound_height: f64,
    /// Sup-norm of `h - H` on `[0, t0]`.
    pub dev_h: f64,
    /// Sup-norm of `xi - xi_limit` on `[t0 + 0.05, t_end]`.
    pub dev_xi: f64,
    pub energy_residual: f64,
}

/// Summary row of a completed run; deviations are NaN when `t0` is undefined
/// or outside the run.
pub fn summarize(traj: &Trajectory, grid: usize) -> SummaryRow {
    let rebound = detect_rebound(traj, 0.0);
    let residual: EnergyResidual = integrator::energy_residual(traj);
    let (mut dev_h, mut dev_xi) = (f64::NAN, f64::NAN);
    if let Ok(lp) = LimitProfiles::for_config(traj.config()) {
        let t_end = traj.t_end();
        if lp.t0 <= t_end {
            dev_h = limit_deviation(traj, &lp, (traj.t_start(), lp.t0), grid).dev_h;
        }
        if lp.t0 + POST_CONTACT_OFFSET <= t_end {
            dev_xi = limit_deviation(traj, &lp, (lp.t0 + POST_CONTACT_OFFSET, t_end), grid).dev_xi;
        }
    }
    SummaryRow {
        mu: traj.config().mu,
        h_min: rebound.h_min,
        t_min: rebound.t_min,
        rebound_height: rebound.rebound_height,
        dev_h,
        dev_xi,
        energy_residual: residual.max_abs,
    }
}

/// Spacings of consecutive zeros of `xi'` inside `[a, b]`.
pub fn xi_dot_zero_spacings(traj: &Trajectory, a: f64, b: f64) -> Vec<f64> {
    let zeros: Vec<f64> = events::crossings(traj, Component::XiDot, 0.0)
        .into_iter()
        .filter(|&t| t >= a && t <= b)
        .collect();
    zeros.windows(2).map(|w| w[1] - w[0]).collect()
}
