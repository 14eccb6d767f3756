//! Time integration of the model with positivity by step rejection,
//! continuous (dense) output and an energy ledger carried as a fifth state
//! component.
//!
//! Two one-step schemes share the driver: the three-stage Radau IIA
//! collocation method (order 5, L-stable, the default) and the explicit
//! Dormand–Prince 5(4) pair. Near the wall the drag relaxes `h'` on a time
//! scale `1 / (mu D)` that shrinks without bound, so the explicit pair is only
//! practical away from contact.

pub mod events;
mod dopri;
mod radau;

use crate::error::{Error, Result};
use crate::model::{self, ModelConfig, State};
use serde::{Deserialize, Serialize};

/// Interior fractions of each accepted step at which the interpolant must keep `h > 0`.
const POSITIVITY_PROBES: [f64; 7] = [0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875];

/// Step size below which a stiffness warning is recorded, relative to `t_end`.
const STIFFNESS_FRACTION: f64 = 1e-14;

/// Number of state components: `h, h', xi, xi', ledger`.
pub const DIM: usize = 5;
/// Components carried by the dense interpolant.
pub(crate) const DENSE_DIM: usize = 4;

pub(crate) type Vector = [f64; DIM];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSettings {
    #[serde(default = "defaults::rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "defaults::abs_tol")]
    pub abs_tol: f64,
    /// Largest admissible step (s); `None` means the whole interval.
    #[serde(default)]
    pub max_step: Option<f64>,
    /// First trial step (s); `None` means `1e-6 (t_end - t_start)`.
    #[serde(default)]
    pub initial_step: Option<f64>,
    /// Consecutive rejections tolerated before giving up.
    #[serde(default = "defaults::max_rejections")]
    pub max_rejections: u32,
    /// Hard cap on accepted steps.
    #[serde(default = "defaults::max_steps")]
    pub max_steps: usize,
    #[serde(default)]
    pub method: Method,
    /// Test hook: scales the ledger rate to seed a deliberate fault.
    #[doc(hidden)]
    #[serde(skip)]
    pub ledger_fault: Option<f64>,
}

mod defaults {
    pub fn rel_tol() -> f64 {
        1e-8
    }
    pub fn abs_tol() -> f64 {
        1e-10
    }
    pub fn max_rejections() -> u32 {
        50
    }
    pub fn max_steps() -> usize {
        50_000_000
    }
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            rel_tol: defaults::rel_tol(),
            abs_tol: defaults::abs_tol(),
            max_step: None,
            initial_step: None,
            max_rejections: defaults::max_rejections(),
            max_steps: defaults::max_steps(),
            method: Method::default(),
            ledger_fault: None,
        }
    }
}

impl IntegratorSettings {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        IntegratorSettings {
            rel_tol,
            abs_tol,
            ..Default::default()
        }
    }

    /// Both tolerances divided by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        IntegratorSettings {
            rel_tol: self.rel_tol / factor,
            abs_tol: self.abs_tol / factor,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::validation("rel_tol", "must be finite and > 0"));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::validation("abs_tol", "must be finite and > 0"));
        }
        if let Some(s) = self.max_step {
            if !(s > 0.0) {
                return Err(Error::validation("max_step", "must be > 0"));
            }
        }
        if let Some(s) = self.initial_step {
            if !(s > 0.0) {
                return Err(Error::validation("initial_step", "must be > 0"));
            }
        }
        if self.max_rejections == 0 {
            return Err(Error::validation("max_rejections", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    TimeEnd,
    /// Stopped by a [`StopCondition`] at the recorded final sample.
    Event,
    Failure(Error),
}

/// Optional early stop for [`integrate_until`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopCondition {
    /// Stop at the first step on which `h` falls to or below the level.
    DistanceBelow(f64),
    /// Stop at the first step on which `h'` changes sign.
    VelocitySignChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StiffnessWarning {
    pub t: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub positivity_rejections: usize,
    pub rhs_evaluations: usize,
    /// Rejections caused by a diverging or slow Newton iteration (implicit scheme only).
    pub newton_failures: usize,
    /// Smallest accepted step.
    pub min_step: f64,
}

/// One accepted sample: the state and the accumulated dissipation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub state: State,
    pub ledger: f64,
}

/// Accepted samples of one run plus the interpolant between them.
#[derive(Debug, Clone)]
pub struct Trajectory {
    config: ModelConfig,
    settings: IntegratorSettings,
    times: Vec<f64>,
    values: Vec<Vector>,
    basis: DenseBasis,
    dense: Vec<DenseCoeffs>,
    termination: Termination,
    warnings: Vec<StiffnessWarning>,
    stats: Stats,
}

/// Which state component an interpolation or crossing search refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    H = 0,
    HDot = 1,
    Xi = 2,
    XiDot = 3,
}

impl Trajectory {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn settings(&self) -> &IntegratorSettings {
        &self.settings
    }

    pub fn termination(&self) -> &Termination {
        &self.termination
    }

    pub fn is_complete(&self) -> bool {
        !matches!(self.termination, Termination::Failure(_))
    }

    pub fn warnings(&self) -> &[StiffnessWarning] {
        &self.warnings
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial sample")
    }

    pub fn sample(&self, i: usize) -> Sample {
        let v = &self.values[i];
        Sample {
            state: State {
                t: self.times[i],
                h: v[0],
                h_dot: v[1],
                xi: v[2],
                xi_dot: v[3],
            },
            ledger: v[4],
        }
    }

    pub fn samples(&self) -> impl Iterator<Item = Sample> + '_ {
        (0..self.len()).map(|i| self.sample(i))
    }

    /// Index `i` of the step `[t_i, t_{i+1}]` containing `t` (clamped to the range).
    pub(crate) fn step_index(&self, t: f64) -> usize {
        let n = self.times.len();
        if n < 2 {
            return 0;
        }
        let i = self.times.partition_point(|&s| s <= t);
        i.clamp(1, n - 1) - 1
    }

    /// Value of one component at fraction `theta` of step `i`.
    pub(crate) fn eval_in_step(&self, i: usize, theta: f64, c: Component) -> f64 {
        let k = c as usize;
        let y0 = self.values[i][k];
        if i + 1 >= self.values.len() {
            return y0;
        }
        let y1 = self.values[i + 1][k];
        // samples are reproduced exactly
        if theta == 0.0 {
            y0
        } else if theta == 1.0 {
            y1
        } else {
            self.basis.eval(y0, y1, &self.dense[i], k, theta)
        }
    }

    pub(crate) fn theta(&self, i: usize, t: f64) -> f64 {
        if i + 1 >= self.times.len() {
            return 0.0;
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        ((t - t0) / (t1 - t0)).clamp(0.0, 1.0)
    }

    /// Dense-output value of one component at time `t`.
    pub fn component_at(&self, t: f64, c: Component) -> f64 {
        let i = self.step_index(t);
        self.eval_in_step(i, self.theta(i, t), c)
    }

    /// Dense-output state at time `t` (clamped to the integrated range).
    pub fn interpolate(&self, t: f64) -> State {
        let i = self.step_index(t);
        let th = self.theta(i, t);
        State {
            t: t.clamp(self.t_start(), self.t_end()),
            h: self.eval_in_step(i, th, Component::H),
            h_dot: self.eval_in_step(i, th, Component::HDot),
            xi: self.eval_in_step(i, th, Component::Xi),
            xi_dot: self.eval_in_step(i, th, Component::XiDot),
        }
    }

    /// Interpolated states on a uniform grid of `points` times over `[t0, t1]`.
    pub fn resample(&self, t0: f64, t1: f64, points: usize) -> Vec<State> {
        uniform_grid(t0, t1, points).map(|t| self.interpolate(t)).collect()
    }

    /// Builds a trajectory directly from samples, with the cubic Hermite
    /// interpolant in place of the integrator's continuous extension. Meant for
    /// synthetic data in tests and post-processing checks.
    pub fn from_samples(config: ModelConfig, samples: &[Sample]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::validation("samples", "at least one sample required"));
        }
        let mut times = Vec::with_capacity(samples.len());
        let mut values = Vec::with_capacity(samples.len());
        let mut derivs = Vec::with_capacity(samples.len());
        for s in samples {
            if times.last().is_some_and(|&t| s.state.t <= t) {
                return Err(Error::validation("samples", "times must be strictly increasing"));
            }
            if !(s.state.h > 0.0) {
                return Err(Error::NonpositiveDistance { h: s.state.h });
            }
            let d = model::rhs(&s.state, &config)?;
            times.push(s.state.t);
            values.push([s.state.h, s.state.h_dot, s.state.xi, s.state.xi_dot, s.ledger]);
            derivs.push([d.dh, d.dh_dot, d.dxi, d.dxi_dot]);
        }
        // Hermite cubic written in the rcont basis (rcont5 = 0)
        let dense = (0..times.len().saturating_sub(1))
            .map(|i| {
                let dt = times[i + 1] - times[i];
                let mut r3 = [0.0; DENSE_DIM];
                let mut r4 = [0.0; DENSE_DIM];
                for k in 0..DENSE_DIM {
                    let delta = values[i + 1][k] - values[i][k];
                    r3[k] = dt * derivs[i][k] - delta;
                    r4[k] = delta - dt * derivs[i + 1][k] - r3[k];
                }
                [r3, r4, [0.0; DENSE_DIM]]
            })
            .collect();
        Ok(Trajectory {
            config,
            settings: IntegratorSettings::default(),
            times,
            values,
            basis: DenseBasis::RungeKutta,
            dense,
            termination: Termination::TimeEnd,
            warnings: Vec::new(),
            stats: Stats::default(),
        })
    }
}

pub(crate) fn uniform_grid(t0: f64, t1: f64, points: usize) -> impl Iterator<Item = f64> {
    let n = points.max(1);
    (0..n).map(move |j| {
        if n == 1 {
            t0
        } else if j + 1 == n {
            t1
        } else {
            t0 + (t1 - t0) * j as f64 / (n - 1) as f64
        }
    })
}

fn to_state(t: f64, y: &Vector) -> State {
    State {
        t,
        h: y[0],
        h_dot: y[1],
        xi: y[2],
        xi_dot: y[3],
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Three-stage Radau IIA, order 5, with an embedded order-3 error estimate.
    #[default]
    Radau5,
    /// Explicit Dormand–Prince 5(4) with PI step control.
    DormandPrince,
}

/// Per-step coefficients of the continuous extension, one triple per state component.
pub(crate) type DenseCoeffs = [[f64; DENSE_DIM]; 3];

/// How [`DenseCoeffs`] are to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum DenseBasis {
    /// `y0 + θ (Δ + (1-θ) (r3 + θ (r4 + (1-θ) r5)))`, the DOPRI5 extension
    /// (cubic Hermite when `r5 = 0`).
    RungeKutta,
    /// Collocation cubic in Newton form about the step end, `s = θ - 1`:
    /// `y1 + s (d0 + (s - s1) (d1 + (s - s2) d2))`.
    Collocation,
}

impl DenseBasis {
    pub(crate) fn eval(self, y0: f64, y1: f64, d: &DenseCoeffs, k: usize, theta: f64) -> f64 {
        match self {
            DenseBasis::RungeKutta => {
                let one = 1.0 - theta;
                y0 + theta * ((y1 - y0) + one * (d[0][k] + theta * (d[1][k] + one * d[2][k])))
            }
            DenseBasis::Collocation => {
                let s = theta - 1.0;
                y1 + s * (d[0][k] + (s - radau::S1) * (d[1][k] + (s - radau::S2) * d[2][k]))
            }
        }
    }
}

pub(crate) struct Field<'a> {
    cfg: &'a ModelConfig,
    ledger_scale: f64,
    pub(crate) abs_tol: f64,
    pub(crate) rel_tol: f64,
    pub(crate) evaluations: usize,
}

impl Field<'_> {
    pub(crate) fn eval(&mut self, t: f64, y: &Vector) -> Result<Vector> {
        self.evaluations += 1;
        let (d, rate) = model::rhs_with_dissipation(&to_state(t, y), self.cfg)?;
        Ok([d.dh, d.dh_dot, d.dxi, d.dxi_dot, self.ledger_scale * rate])
    }

    pub(crate) fn jacobian(&self, t: f64, y: &Vector) -> Result<[[f64; DIM]; DIM]> {
        let mut j = model::jacobian(&to_state(t, y), self.cfg)?;
        for v in j[4].iter_mut() {
            *v *= self.ledger_scale;
        }
        Ok(j)
    }

    /// Componentwise max norm of `e` against `abs_tol + rel_tol max(|y0|, |y1|)`.
    pub(crate) fn error_norm(&self, e: &Vector, y0: &Vector, y1: &Vector) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..DIM {
            let scale = self.abs_tol + self.rel_tol * y0[i].abs().max(y1[i].abs());
            err = err.max((e[i] / scale).abs());
        }
        if err.is_finite() {
            err
        } else {
            f64::INFINITY
        }
    }
}

/// Result of one trial step.
pub(crate) enum Attempt {
    /// The scheme produced a candidate; `err <= 1` means it passes error control.
    Step { y_new: Vector, err: f64, dense: DenseCoeffs },
    /// Retry with the step scaled by `factor`.
    Retry { factor: f64, cause: RetryCause },
    /// Unrecoverable.
    Fail(Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RetryCause {
    Positivity,
    Newton,
}

pub(crate) trait Scheme {
    const BASIS: DenseBasis;
    fn start(&mut self, field: &mut Field<'_>, t: f64, y: &Vector) -> Result<()>;
    fn attempt(&mut self, field: &mut Field<'_>, t: f64, y: &Vector, h: f64, first: bool, last_rejected: bool) -> Attempt;
    /// Commits the last attempt as accepted at `(t, y)`; returns the next step.
    #[allow(clippy::too_many_arguments)]
    fn accept(&mut self, field: &mut Field<'_>, t: f64, y: &Vector, err: f64, h: f64, first: bool, last_rejected: bool) -> Result<f64>;
    /// Step to retry with after an error-control rejection.
    fn reject(&mut self, err: f64, h: f64, first: bool) -> f64;
}

/// Integrates the model from `cfg.initial` to `t_end`.
///
/// Numerical breakdown is reported through [`Termination::Failure`] on the
/// returned (partial) trajectory; `Err` is reserved for invalid input.
pub fn integrate(cfg: &ModelConfig, t_end: f64, settings: &IntegratorSettings) -> Result<Trajectory> {
    integrate_until(cfg, t_end, settings, None)
}

pub fn integrate_until(
    cfg: &ModelConfig,
    t_end: f64,
    settings: &IntegratorSettings,
    stop: Option<StopCondition>,
) -> Result<Trajectory> {
    cfg.validate()?;
    settings.validate()?;
    let t_start = cfg.initial.t;
    if !(t_end >= t_start) || !t_end.is_finite() {
        return Err(Error::validation("t_end", "must be finite and >= the initial time"));
    }
    match settings.method {
        Method::Radau5 => Ok(drive(radau::Radau5::new(), cfg, t_end, settings, stop)),
        Method::DormandPrince => Ok(drive(dopri::DormandPrince::new(), cfg, t_end, settings, stop)),
    }
}

fn drive<S: Scheme>(
    mut scheme: S,
    cfg: &ModelConfig,
    t_end: f64,
    settings: &IntegratorSettings,
    stop: Option<StopCondition>,
) -> Trajectory {
    let t_start = cfg.initial.t;
    let s0 = &cfg.initial;
    let mut y: Vector = [s0.h, s0.h_dot, s0.xi, s0.xi_dot, 0.0];
    let mut traj = Trajectory {
        config: cfg.clone(),
        settings: *settings,
        times: vec![t_start],
        values: vec![y],
        basis: S::BASIS,
        dense: Vec::new(),
        termination: Termination::TimeEnd,
        warnings: Vec::new(),
        stats: Stats {
            min_step: f64::INFINITY,
            ..Stats::default()
        },
    };
    if t_end == t_start {
        return traj;
    }

    let mut field = Field {
        cfg,
        ledger_scale: settings.ledger_fault.unwrap_or(1.0),
        abs_tol: settings.abs_tol,
        rel_tol: settings.rel_tol,
        evaluations: 0,
    };
    let span = t_end - t_start;
    let max_step = settings.max_step.unwrap_or(span).min(span);
    let mut step = settings.initial_step.unwrap_or(1e-6 * span).min(max_step);
    let stiff_threshold = STIFFNESS_FRACTION * t_end.abs().max(span);
    let mut t = t_start;
    let mut first = true;
    let mut last_rejected = false;
    let mut consecutive_rejections = 0u32;
    let mut in_stiff_episode = false;

    let finish = |mut traj: Trajectory, field: &Field<'_>, failure: Option<Error>| {
        if let Some(e) = failure {
            traj.termination = Termination::Failure(e);
        }
        traj.stats.rhs_evaluations = field.evaluations;
        traj
    };
    let step_failure = |t: f64, reason: String| Some(Error::StepFailure { t, reason });

    if let Err(e) = scheme.start(&mut field, t, &y) {
        return finish(traj, &field, Some(e));
    }

    while t < t_end {
        if traj.stats.accepted >= settings.max_steps {
            let reason = format!("exceeded {} accepted steps", settings.max_steps);
            return finish(traj, &field, step_failure(t, reason));
        }
        let last = t + step * 1.000_001 >= t_end;
        if last {
            step = t_end - t;
        }
        if t + step <= t {
            return finish(traj, &field, step_failure(t, format!("step size {step:e} underflows")));
        }

        let mut retry = None;
        let mut candidate = None;
        match scheme.attempt(&mut field, t, &y, step, first, last_rejected) {
            Attempt::Fail(e) => return finish(traj, &field, Some(e)),
            Attempt::Retry { factor, cause } => retry = Some((factor, cause)),
            Attempt::Step { y_new, err, dense } => {
                let positive = y_new[0] > 0.0
                    && (err > 1.0
                        || POSITIVITY_PROBES
                            .iter()
                            .all(|&th| S::BASIS.eval(y[0], y_new[0], &dense, 0, th) > 0.0));
                if positive {
                    candidate = Some((y_new, err, dense));
                } else {
                    retry = Some((0.5, RetryCause::Positivity));
                }
            }
        }

        if let Some((factor, cause)) = retry {
            traj.stats.rejected += 1;
            match cause {
                RetryCause::Positivity => traj.stats.positivity_rejections += 1,
                RetryCause::Newton => traj.stats.newton_failures += 1,
            }
            consecutive_rejections += 1;
            if consecutive_rejections > settings.max_rejections {
                let reason = format!("{consecutive_rejections} consecutive rejections ({cause:?}), h = {:e}", y[0]);
                return finish(traj, &field, step_failure(t, reason));
            }
            step *= factor;
            last_rejected = true;
            continue;
        }

        let (y_new, err, dense) = candidate.expect("either retry or candidate is set");
        if err <= 1.0 {
            let t_new = if last { t_end } else { t + step };
            let sign_before = y[1];
            y = y_new;
            traj.times.push(t_new);
            traj.values.push(y);
            traj.dense.push(dense);
            traj.stats.accepted += 1;
            traj.stats.min_step = traj.stats.min_step.min(step);
            if step < stiff_threshold && !last {
                if !in_stiff_episode {
                    traj.warnings.push(StiffnessWarning { t: t_new, step });
                }
                in_stiff_episode = true;
            } else {
                in_stiff_episode = false;
            }
            let next = match scheme.accept(&mut field, t_new, &y, err, step, first, last_rejected) {
                Ok(next) => next,
                Err(e) => return finish(traj, &field, Some(e)),
            };
            t = t_new;
            first = false;
            consecutive_rejections = 0;
            last_rejected = false;
            step = next.min(max_step);

            let stop_now = match stop {
                Some(StopCondition::DistanceBelow(level)) => y[0] <= level,
                Some(StopCondition::VelocitySignChange) => sign_before * y[1] < 0.0,
                None => false,
            };
            if stop_now && t < t_end {
                traj.termination = Termination::Event;
                break;
            }
        } else {
            traj.stats.rejected += 1;
            consecutive_rejections += 1;
            if consecutive_rejections > settings.max_rejections {
                let reason = format!("{consecutive_rejections} consecutive rejections (error {err:e})");
                return finish(traj, &field, step_failure(t, reason));
            }
            step = scheme.reject(err, step, first);
            last_rejected = true;
        }
    }
    finish(traj, &field, None)
}

/// Largest violation of `F(t) + ledger(t) = F(0)` over the accepted samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyResidual {
    pub max_abs: f64,
    pub t: f64,
    /// `F(0)` of the run, for relative statements.
    pub initial_energy: f64,
}

impl EnergyResidual {
    pub fn relative(&self) -> f64 {
        if self.initial_energy > 0.0 {
            self.max_abs / self.initial_energy
        } else {
            self.max_abs
        }
    }
}

pub fn energy_residual(traj: &Trajectory) -> EnergyResidual {
    let cfg = traj.config();
    let f0 = model::energy(&traj.sample(0).state, cfg);
    let mut out = EnergyResidual {
        max_abs: 0.0,
        t: traj.t_start(),
        initial_energy: f0,
    };
    for s in traj.samples() {
        let r = (model::energy(&s.state, cfg) + s.ledger - f0).abs();
        if r > out.max_abs {
            out.max_abs = r;
            out.t = s.state.t;
        }
    }
    out
}
