//! The acceptance property suite behind `rebound verify` and the
//! `acceptance` test target.
//!
//! Every criterion is evaluated on the canonical parameter set and reported as
//! one line. Sweeps are computed once and shared between criteria.

use crate::drag::{
    self, analytic_ball, assumption_audit, fit_loglog_slope, lubrication_direct, lubrication_shape_factor,
    Assumption, AuditParams, AuditStatus, BodyGeometry, DragLaw,
};
use crate::error::{Error, Result};
use crate::experiments::{
    detect_rebound, limit_deviation, physical_rebound_verdict, run_sweep, summarize, turning_points, xi_dot_zero_spacings,
    LimitProfiles, SweepConfig, SweepResult, VerdictThresholds, DEFAULT_MU_VALUES, DEFAULT_T_END,
    POST_CONTACT_OFFSET,
};
use crate::integrator::{self, events, IntegratorSettings, Trajectory};
use crate::io::log_grid;
use crate::model::{Mode, ModelConfig, SpringParams, State};
use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

/// Dense-output points per trajectory for sup-norm and positivity scans.
const SCAN_POINTS: usize = 40_001;
/// Criterion 7 distance window and fit tolerance.
const SLOPE_WINDOW: (f64, f64) = (1e-6, 1e-4);
const SLOPE_TOL: f64 = 0.02;
/// Quadrature tolerance used for the drag criteria.
const DRAG_QUAD_TOL: f64 = 1e-10;
/// `max(y+, 1/200) + 1e-4` with `y+ = 0.014318`.
const XI_AMPLITUDE_BOUND: f64 = 0.01442;

pub const CRITERIA: [u8; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

/// Canonical spring: `M = 1`, `m = 8.2`, `k = 1e4`.
pub fn canonical_spring() -> SpringParams {
    SpringParams::new(1.0, 8.2, 10_000.0).expect("canonical spring is valid")
}

/// Canonical coupled shell with drag stiffening `c2` (20 deformable, 0 rigid).
pub fn canonical_shell(c2: f64) -> ModelConfig {
    ModelConfig {
        spring: canonical_spring(),
        drag: DragLaw::PowerLawCoupled { c1: 0.1, c2, c3: 7.4, shell_mass: 1.0 },
        mu: DEFAULT_MU_VALUES[0],
        initial: State { t: 0.0, h: 0.3, h_dot: -0.5, xi: 0.0, xi_dot: 0.0 },
        mode: Mode::Coupled,
    }
}

/// Rigid body with `D = 0.1 h^(-3/2)`.
pub fn canonical_rigid_body() -> ModelConfig {
    ModelConfig {
        drag: DragLaw::RigidPower { coefficient: 0.1, alpha: 1.5 },
        mode: Mode::RigidBody,
        ..canonical_shell(0.0)
    }
}

/// Faults the suite must detect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Ledger accumulated at half its true rate.
    Ledger,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    /// Criteria to run; all when `None`.
    pub only: Option<Vec<u8>>,
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Excluded,
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    /// 0 for supplementary properties outside the numbered list.
    pub id: u8,
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Excluded => "EXCLUDED",
        };
        if self.id == 0 {
            write!(f, "[{tag}] property     {}: {}", self.name, self.detail)
        } else {
            write!(f, "[{tag}] criterion {:>2} {}: {}", self.id, self.name, self.detail)
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub results: Vec<CriterionResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.status != Status::Fail)
    }

    pub fn get(&self, id: u8) -> Option<&CriterionResult> {
        self.results.iter().find(|r| r.id == id)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.results {
            writeln!(f, "{r}")?;
        }
        let failed = self.results.iter().filter(|r| r.status == Status::Fail).count();
        write!(f, "{} criteria run, {failed} failed", self.results.len())
    }
}

/// Sweeps shared between criteria, computed on first use.
struct Context {
    settings: IntegratorSettings,
    deformable: OnceLock<Result<SweepResult>>,
    rigid_shell: OnceLock<Result<SweepResult>>,
    deformable_tight: OnceLock<Result<SweepResult>>,
    rigid_shell_tight: OnceLock<Result<SweepResult>>,
}

fn sweep_of(base: ModelConfig, settings: &IntegratorSettings) -> Result<SweepResult> {
    let cfg = SweepConfig::new(base, DEFAULT_MU_VALUES.to_vec());
    run_sweep(&cfg, settings)
}

impl Context {
    fn new(fault: Option<Fault>) -> Self {
        let mut settings = IntegratorSettings::default();
        if fault == Some(Fault::Ledger) {
            settings.ledger_fault = Some(0.5);
        }
        Context {
            settings,
            deformable: OnceLock::new(),
            rigid_shell: OnceLock::new(),
            deformable_tight: OnceLock::new(),
            rigid_shell_tight: OnceLock::new(),
        }
    }

    fn deformable(&self) -> Result<&SweepResult> {
        let s = self.deformable.get_or_init(|| sweep_of(canonical_shell(20.0), &self.settings));
        s.as_ref().map_err(Clone::clone)
    }

    fn rigid_shell(&self) -> Result<&SweepResult> {
        let s = self.rigid_shell.get_or_init(|| sweep_of(canonical_shell(0.0), &self.settings));
        s.as_ref().map_err(Clone::clone)
    }

    fn tight(&self, c2: f64) -> Result<&SweepResult> {
        let cell = if c2 > 0.0 { &self.deformable_tight } else { &self.rigid_shell_tight };
        let s = cell.get_or_init(|| sweep_of(canonical_shell(c2), &self.settings.tightened(10.0)));
        s.as_ref().map_err(Clone::clone)
    }

    fn both(&self) -> Result<[(&'static str, &SweepResult); 2]> {
        Ok([("rigid shell", self.rigid_shell()?), ("deformable", self.deformable()?)])
    }
}

/// Completed trajectories of a sweep, or an error naming the first failure.
fn completed(sweep: &SweepResult) -> std::result::Result<Vec<&Trajectory>, String> {
    sweep
        .entries
        .iter()
        .map(|e| e.complete().ok_or_else(|| format!("mu = {} failed: {}", e.mu, e.failure().unwrap_or_default())))
        .collect()
}

type Outcome = std::result::Result<(bool, String), String>;

fn finish(id: u8, name: &'static str, outcome: Outcome) -> CriterionResult {
    let (status, detail) = match outcome {
        Ok((true, d)) => (Status::Pass, d),
        Ok((false, d)) => (Status::Fail, d),
        Err(e) => (Status::Fail, format!("error: {e}")),
    };
    CriterionResult { id, name, status, detail }
}

fn err_str(e: Error) -> String {
    e.to_string()
}

pub fn run_suite(opts: &SuiteOptions) -> SuiteReport {
    let ctx = Context::new(opts.fault);
    let selected = |id: u8| opts.only.as_ref().is_none_or(|v| v.contains(&id));
    let mut report = SuiteReport::default();
    for id in CRITERIA.into_iter().filter(|&id| selected(id)) {
        let r = match id {
            1 => finish(1, "no contact", no_contact(&ctx)),
            2 => finish(2, "energy identity", energy_identity(&ctx)),
            3 => finish(3, "rigid-body monotonicity", rigid_monotone(&ctx)),
            4 => finish(4, "hit-and-stick limit", hit_and_stick(&ctx)),
            5 => finish(5, "physical rebound", physical_rebound(&ctx)),
            6 => finish(6, "drag quadrature vs closed form", drag_closed_form()),
            7 => finish(7, "asymptotic drag exponents", drag_exponents()),
            8 => finish(8, "oscillator limit", oscillator_limit(&ctx)),
            9 => finish(9, "assumption audit", audit()),
            _ => CriterionResult {
                id,
                name: "FEM panels",
                status: Status::Excluded,
                detail: "full PDE solver out of scope; ODE panel covered by criteria 4-5".into(),
            },
        };
        report.results.push(r);
    }
    if opts.only.is_none() {
        report.results.push(finish(0, "elongation amplitude", xi_amplitude(&ctx)));
    }
    report
}

fn no_contact(ctx: &Context) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for (label, sweep) in ctx.both().map_err(err_str)? {
        for traj in completed(sweep).map_err(|e| format!("{label}: {e}"))? {
            let dense = traj
                .resample(traj.t_start(), traj.t_end(), SCAN_POINTS)
                .iter()
                .map(|s| s.h)
                .fold(f64::INFINITY, f64::min);
            let samples = traj.samples().map(|s| s.state.h).fold(f64::INFINITY, f64::min);
            let event = events::min_distance(traj).state.h;
            let min = dense.min(samples).min(event);
            ok &= min > 0.0 && traj.t_end() == DEFAULT_T_END;
            worst = worst.min(min);
        }
    }
    Ok((ok, format!("min h over both sweeps = {worst:.3e} > 0")))
}

fn energy_identity(ctx: &Context) -> Outcome {
    let mut ok = true;
    let mut worst_rel: f64 = 0.0;
    let mut worst_ratio = f64::INFINITY;
    for c2 in [0.0, 20.0] {
        let base = if c2 > 0.0 { ctx.deformable() } else { ctx.rigid_shell() }.map_err(err_str)?;
        let tight = ctx.tight(c2).map_err(err_str)?;
        for (a, b) in completed(base)?.into_iter().zip(completed(tight)?) {
            let ra = integrator::energy_residual(a);
            let rb = integrator::energy_residual(b);
            let ratio = ra.max_abs / rb.max_abs;
            ok &= ra.relative() <= 1e-6 && ratio >= 8.0;
            worst_rel = worst_rel.max(ra.relative());
            worst_ratio = worst_ratio.min(ratio);
        }
    }
    Ok((
        ok,
        format!("max residual {worst_rel:.2e} F(0) <= 1e-6 F(0); min shrink at 10x tighter tolerances {worst_ratio:.1}x >= 8x"),
    ))
}

fn rigid_monotone(ctx: &Context) -> Outcome {
    let sweep = sweep_of(canonical_rigid_body(), &ctx.settings).map_err(err_str)?;
    let slack = 10.0 * ctx.settings.abs_tol;
    let mut ok = true;
    let mut worst_rise = f64::NEG_INFINITY;
    for traj in completed(&sweep)? {
        let mut hs: Vec<(f64, f64)> = traj.samples().map(|s| (s.state.t, s.state.h)).collect();
        hs.extend(traj.resample(0.0, DEFAULT_T_END, SCAN_POINTS).iter().map(|s| (s.t, s.h)));
        hs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in hs.windows(2) {
            let rise = w[1].1 - w[0].1;
            worst_rise = worst_rise.max(rise);
            ok &= rise <= slack;
        }
        ok &= traj.t_end() == DEFAULT_T_END;
    }
    Ok((ok, format!("largest increase of h {worst_rise:.2e} <= {slack:.0e} on [0, 2] for all mu")))
}

fn non_increasing(v: &[f64], slack: f64) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[1] <= (1.0 + slack) * w[0])
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn hit_and_stick(ctx: &Context) -> Outcome {
    let sweep = ctx.rigid_shell().map_err(err_str)?;
    let lp = LimitProfiles::for_config(&sweep.config.base).map_err(err_str)?;
    let trajs = completed(sweep)?;
    let rows: Vec<_> = trajs.iter().map(|t| summarize(t, SCAN_POINTS)).collect();
    let dev_h: Vec<f64> = rows.iter().map(|r| r.dev_h).collect();
    let dev_xi: Vec<f64> = rows.iter().map(|r| r.dev_xi).collect();
    let early_xi: Vec<f64> = trajs.iter().map(|t| limit_deviation(t, &lp, (0.0, lp.t0), SCAN_POINTS).dev_xi).collect();
    let ok = non_increasing(&dev_h, 0.05) && non_increasing(&dev_xi, 0.05) && non_increasing(&early_xi, 0.05);
    Ok((
        ok,
        format!(
            "t0 = {}; dev_h on [0, t0]: [{}]; dev_xi on [0, t0]: [{}]; dev_xi on [t0+{POST_CONTACT_OFFSET}, 2]: [{}]",
            lp.t0,
            fmt_list(&dev_h),
            fmt_list(&early_xi),
            fmt_list(&dev_xi)
        ),
    ))
}

fn physical_rebound(ctx: &Context) -> Outcome {
    let th = VerdictThresholds::default();
    let sweep = ctx.deformable().map_err(err_str)?;
    let trajs = completed(sweep)?;
    let all_rebound = trajs.iter().all(|t| detect_rebound(t, 0.0).rebounded);
    let verdict = physical_rebound_verdict(sweep, th).map_err(err_str)?;
    let h0 = sweep.config.base.initial.h;
    let heights: Vec<f64> = verdict.heights.iter().map(|&(_, v)| v).collect();
    let n = heights.len();
    let tail_ok = n >= 2 && heights[n - 2..].iter().all(|&v| v > th.persistent_fraction * h0);
    let rigid = physical_rebound_verdict(ctx.rigid_shell().map_err(err_str)?, th).map_err(err_str)?;
    let ok = all_rebound && tail_ok && verdict.trend >= 0.0 && verdict.physical() == Some(true) && rigid.physical() == Some(false);
    Ok((
        ok,
        format!(
            "deformable heights [{}], trend {:.3e}, verdict {:?}; rigid shell heights [{}], verdict {:?}",
            fmt_list(&heights),
            verdict.trend,
            verdict.outcome,
            fmt_list(&rigid.heights.iter().map(|&(_, v)| v).collect::<Vec<_>>()),
            rigid.outcome
        ),
    ))
}

fn drag_closed_form() -> Outcome {
    let radius = 0.2;
    let mut worst: f64 = 0.0;
    let mut headline = f64::NAN;
    for dim in [2u8, 3] {
        let geom = BodyGeometry::new(1.0, 1.0 / (2.0 * radius), dim).map_err(err_str)?;
        for h in [1e-3, 1e-2, 1e-1] {
            let exact = analytic_ball(radius, h, dim).map_err(err_str)?;
            let quad = lubrication_shape_factor(&geom, h, DRAG_QUAD_TOL).map_err(err_str)?;
            worst = worst.max((quad - exact).abs() / exact);
            if dim == 3 && h == 1e-1 {
                headline = quad;
            }
        }
    }
    let ok = worst <= 1e-6 && (headline - 6.0 * PI * radius * radius / 0.1).abs() < 1e-4;
    Ok((ok, format!("max relative error {worst:.2e} <= 1e-6; N=3, h=0.1: D_lub = {headline:.4}")))
}

fn drag_exponents() -> Outcome {
    let hs = log_grid(SLOPE_WINDOW.0, SLOPE_WINDOW.1, 9);
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for dim in [2u8, 3] {
        for alpha in [0.5, 1.0, 2.0] {
            let expected = match drag::asymptotic_exponent(alpha, dim).exponent() {
                Some(e) => e,
                None => return Err(format!("no exponent for alpha = {alpha}, N = {dim}")),
            };
            let oracle = if dim == 2 { -3.0 * alpha / (1.0 + alpha) } else { (1.0 - 3.0 * alpha) / (1.0 + alpha) };
            let geom = BodyGeometry::new(alpha, 2.5, dim).map_err(err_str)?;
            let points = hs
                .iter()
                .map(|&h| lubrication_direct(&geom, h, 1e-9).map(|d| (h, d)))
                .collect::<Result<Vec<_>>>()
                .map_err(err_str)?;
            let slope = fit_loglog_slope(&points).ok_or("slope fit failed")?;
            let dev = (slope - oracle).abs();
            worst = worst.max(dev);
            ok &= dev <= SLOPE_TOL && expected == oracle;
            parts.push(format!("N={dim} a={alpha}: {slope:.4}"));
        }
    }
    let thin = BodyGeometry::new(1.0 / 3.0, 2.5, 3).map_err(err_str)?;
    let divergent = matches!(lubrication_direct(&thin, 1e-3, 1e-8), Err(Error::DivergentIntegral { .. }))
        && matches!(lubrication_shape_factor(&thin, 1e-3, 1e-8), Err(Error::DivergentIntegral { .. }));
    ok &= divergent;
    Ok((
        ok,
        format!(
            "slopes {}; max |slope - expected| {worst:.1e} <= {SLOPE_TOL}; N=3 a=1/3 divergent: {divergent}",
            parts.join(", ")
        ),
    ))
}

fn oscillator_limit(ctx: &Context) -> Outcome {
    let spring = canonical_spring();
    let half = PI * (spring.internal_mass / spring.stiffness).sqrt();
    let tp = turning_points(&spring, -0.5).map_err(err_str)?;
    let quad_err = ((tp.t_plus - half).abs()).max((tp.t_minus - half).abs()) / half;
    let mut ok = quad_err <= 1e-6;

    let spacing_stats = |sweep: &SweepResult| -> std::result::Result<(f64, f64, usize), String> {
        let traj = completed(sweep)?.pop().ok_or("empty sweep")?;
        let t0 = LimitProfiles::for_config(traj.config()).map_err(err_str)?.t0;
        let gaps = xi_dot_zero_spacings(traj, t0 + POST_CONTACT_OFFSET, traj.t_end());
        let worst = gaps.iter().map(|g| (g - half).abs() / half).fold(0.0, f64::max);
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        Ok((mean, worst, gaps.len()))
    };
    let (mean, worst, n) = spacing_stats(ctx.rigid_shell().map_err(err_str)?)?;
    ok &= n >= 10 && worst <= 0.02;
    let (free_mean, _, _) = spacing_stats(ctx.deformable().map_err(err_str)?)?;
    let free = PI / spring.free_frequency();
    Ok((
        ok,
        format!(
            "pi sqrt(m/k) = {half:.6}; t+/t- rel err {quad_err:.1e} <= 1e-6; rigid shell mu=0.001 xi' zero spacing mean {mean:.5} ({n} gaps, max rel dev {worst:.1e} <= 2%); info: deformable spacing {free_mean:.5} vs free pi/omega {free:.5}"
        ),
    ))
}

fn audit() -> Outcome {
    let near = log_grid(1e-6, 1.0, 61);
    let xis: Vec<f64> = (0..=40).map(|i| -1.0 + 0.05 * i as f64).collect();
    let p = AuditParams::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, law) in [("D1(c=20)", DragLaw::PrototypeD1 { c: 20.0 }), ("D2", DragLaw::PrototypeD2)] {
        let inside = assumption_audit(&law, &near, &xis, &p).check(Assumption::D4).passed();
        let outside = assumption_audit(&law, &[2.0], &[-0.1, 0.0, 0.1], &p);
        let witness = match &outside.check(Assumption::D4).status {
            AuditStatus::Fail { witness } => Some(witness.h),
            AuditStatus::Pass => None,
        };
        ok &= inside && witness == Some(2.0);
        parts.push(format!("{name}: D4 on (0,1] {}, witness at h = {witness:?}", if inside { "PASS" } else { "FAIL" }));
    }
    let law = DragLaw::RigidPower { coefficient: 0.1, alpha: 1.5 };
    let eq = AuditParams { c_lower: 0.1, alpha_lower: 1.5, ..p };
    let d2 = assumption_audit(&law, &log_grid(1e-8, 1.0, 41), &[-1.0, 0.0, 1.0], &eq).check(Assumption::D2).passed();
    ok &= d2;
    parts.push(format!("RigidPower D2 at equality {}", if d2 { "PASS" } else { "FAIL" }));
    Ok((ok, parts.join("; ")))
}

fn xi_amplitude(ctx: &Context) -> Outcome {
    let spring = canonical_spring();
    let energy_bound = 0.5 * ((spring.shell_mass + spring.internal_mass) / spring.stiffness).sqrt();
    let mut sup: f64 = 0.0;
    for (label, sweep) in ctx.both().map_err(err_str)? {
        for traj in completed(sweep).map_err(|e| format!("{label}: {e}"))? {
            let dense = traj.resample(traj.t_start(), traj.t_end(), SCAN_POINTS);
            sup = dense.iter().map(|s| s.xi.abs()).chain(traj.samples().map(|s| s.state.xi.abs())).fold(sup, f64::max);
        }
    }
    Ok((
        sup <= XI_AMPLITUDE_BOUND && sup <= energy_bound,
        format!("sup |xi| = {sup:.5} <= {XI_AMPLITUDE_BOUND} and <= energy bound {energy_bound:.5}"),
    ))
}
