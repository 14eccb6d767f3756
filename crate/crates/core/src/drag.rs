//! Drag shape factors `D(h, xi)`: the coefficient multiplying `-mu h'` in the
//! vertical drag force on the shell.
//!
//! Besides the closed-form laws used by the ODE experiments, this module
//! evaluates the thin-film (Reynolds) lubrication drag of an axisymmetric body
//! whose near-contact profile is `g(r) = h + gamma r^(1+alpha)`:
//!
//! ```text
//! N = 2:  D_lub = 12 * 2  ∫_0^∞ ∫_r^∞ r' / g(r')^3 dr' dr
//! N = 3:  D_lub = 12 * pi ∫_0^∞ ∫_r^∞ r r' / g(r')^3 dr' dr
//! ```
//!
//! With `r = h^(1/(1+alpha)) u` the gap becomes `h (1 + gamma u^(1+alpha))`, so
//! `D_lub(h) = K(alpha, gamma, N) h^e` with an `h`-independent coefficient `K`
//! that is computed once by adaptive quadrature and cached.

use crate::error::{Error, Result};
use crate::quadrature::{self, QuadSettings};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Default relative tolerance of the lubrication quadrature.
pub const DEFAULT_QUAD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyGeometry {
    /// Shape exponent of the profile `gamma |x|^(1+alpha)`.
    pub alpha: f64,
    /// Shape coefficient (1/m^alpha).
    pub gamma: f64,
    /// Spatial dimension, 2 or 3.
    pub dim: u8,
}

impl BodyGeometry {
    pub fn new(alpha: f64, gamma: f64, dim: u8) -> Result<Self> {
        let g = BodyGeometry { alpha, gamma, dim };
        g.validate()?;
        Ok(g)
    }

    /// Profile of a disk or sphere of radius `radius` to leading order.
    pub fn ball(radius: f64, dim: u8) -> Result<Self> {
        Self::new(1.0, 0.5 / radius, dim)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::validation("alpha", "shape exponent must be finite and > 0"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::validation("gamma", "shape coefficient must be finite and > 0"));
        }
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::validation("dim", "dimension must be 2 or 3"));
        }
        Ok(())
    }

    /// Gap between body and wall at distance `r` from the symmetry axis.
    pub fn gap(&self, h: f64, r: f64) -> f64 {
        h + self.gamma * r.powf(1.0 + self.alpha)
    }
}

/// Small-`h` behaviour of the drag on a body with shape exponent `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Asymptotics {
    /// `D(h) ~ h^exponent`.
    Power(f64),
    /// `D(h) ~ |log h|`.
    Logarithmic,
    /// `D(h)` stays bounded.
    Bounded,
}

impl Asymptotics {
    pub fn exponent(&self) -> Option<f64> {
        match self {
            Asymptotics::Power(e) => Some(*e),
            _ => None,
        }
    }
}

pub fn asymptotic_exponent(alpha: f64, dim: u8) -> Asymptotics {
    if dim == 2 {
        return Asymptotics::Power(-3.0 * alpha / (1.0 + alpha));
    }
    let third = 1.0 / 3.0;
    if alpha > third {
        Asymptotics::Power((1.0 - 3.0 * alpha) / (1.0 + alpha))
    } else if alpha == third {
        Asymptotics::Logarithmic
    } else {
        Asymptotics::Bounded
    }
}

/// Closed-form lubrication drag of a disk (`N = 2`) or sphere (`N = 3`).
pub fn analytic_ball(radius: f64, h: f64, dim: u8) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::validation("R", "radius must be finite and > 0"));
    }
    check_distance(h)?;
    match dim {
        2 => Ok(3.0 * 2f64.sqrt() * PI * (radius / h).powf(1.5)),
        3 => Ok(6.0 * PI * radius * radius / h),
        _ => Err(Error::validation("dim", "dimension must be 2 or 3")),
    }
}

/// Lubrication drag for the shape exponent family, evaluated from scratch.
pub fn lubrication_shape_factor(geom: &BodyGeometry, h: f64, quad_tol: f64) -> Result<f64> {
    geom.validate()?;
    check_distance(h)?;
    let k = lubrication_coefficient(geom, quad_tol)?;
    Ok(k * power(h, lubrication_exponent(geom))?)
}

/// Exponent `e` in `D_lub(h) = K h^e`.
pub fn lubrication_exponent(geom: &BodyGeometry) -> f64 {
    let p = 1.0 + geom.alpha;
    match geom.dim {
        2 => -3.0 * geom.alpha / p,
        _ => (1.0 - 3.0 * geom.alpha) / p,
    }
}

/// The `h`-independent coefficient `K` of the lubrication drag.
///
/// After exchanging the order of integration the double integral collapses to
/// `∫_0^∞ u^(s-1) / (1 + gamma u^p)^3 du` with `p = 1 + alpha` and `s = 3`
/// (`N = 2`) or `s = 4` (`N = 3`). The integrand decays like `u^(-beta)` with
/// `beta = 3p - s + 1`; the range beyond `U = gamma^(-1/p)` is mapped onto
/// `(0, 1]` through `u = U t^(-1/(beta-1))`, which makes the tail integrand
/// bounded at `t = 0`, so no truncation radius is involved.
pub fn lubrication_coefficient(geom: &BodyGeometry, quad_tol: f64) -> Result<f64> {
    geom.validate()?;
    if !(quad_tol > 0.0 && quad_tol < 1.0) {
        return Err(Error::validation("quad_tol", "must lie in (0, 1)"));
    }
    let p = 1.0 + geom.alpha;
    let (s, prefactor) = match geom.dim {
        2 => (3.0, 24.0),
        _ => {
            if geom.alpha <= 1.0 / 3.0 {
                return Err(Error::DivergentIntegral {
                    alpha: geom.alpha,
                    dim: 3,
                });
            }
            (4.0, 6.0 * PI)
        }
    };
    let beta = 3.0 * p - s + 1.0;
    let q = 1.0 / (beta - 1.0);
    let ln_gamma = geom.gamma.ln();
    let ln_u_split = -ln_gamma / p;
    let u_split = ln_u_split.exp();

    // ln(1 + gamma u^p), stable for large u
    let ln_gap = move |ln_u: f64| {
        let ln_x = ln_gamma + p * ln_u;
        if ln_x > 0.0 {
            ln_x + (-ln_x).exp().ln_1p()
        } else {
            ln_x.exp().ln_1p()
        }
    };
    let settings = QuadSettings {
        rel_tol: 0.25 * quad_tol,
        abs_tol: 0.0,
        max_intervals: 4000,
    };

    let core = quadrature::integrate(
        |u| {
            if u <= 0.0 {
                return 0.0;
            }
            let ln_u = u.ln();
            ((s - 1.0) * ln_u - 3.0 * ln_gap(ln_u)).exp()
        },
        0.0,
        u_split,
        settings,
    )?;
    let tail = quadrature::integrate(
        |t| {
            if t <= 0.0 {
                return 0.0;
            }
            let ln_t = t.ln();
            let ln_u = ln_u_split - q * ln_t;
            ((s - 1.0) * ln_u - 3.0 * ln_gap(ln_u) + q.ln() + ln_u_split - (q + 1.0) * ln_t).exp()
        },
        0.0,
        1.0,
        settings,
    )?;
    let integral = core.value + tail.value;
    let estimate = core.error_estimate + tail.error_estimate;
    if !(integral.is_finite() && integral > 0.0) || estimate > quad_tol * integral {
        return Err(Error::QuadratureFailure {
            tol: quad_tol,
            estimate: estimate / integral.abs(),
        });
    }
    Ok(prefactor * integral)
}

/// `∫_a^∞ f` for an integrand decaying like `r^(-beta)`, `beta > 1`, through
/// `r = a t^(-1/(beta-1))`, which leaves a bounded integrand on `(0, 1]`.
fn tail_integral(f: impl Fn(f64) -> f64, a: f64, beta: f64, settings: QuadSettings) -> Result<f64> {
    let q = 1.0 / (beta - 1.0);
    let q_integral = quadrature::integrate(
        |t| {
            if t <= 0.0 {
                return 0.0;
            }
            let r = a * t.powf(-q);
            if !r.is_finite() {
                return 0.0;
            }
            f(r) * q * r / t
        },
        0.0,
        1.0,
        settings,
    )?;
    Ok(q_integral.value)
}

/// Lubrication drag from the nested radial integrals at the given `h`,
/// without exchanging the integration order or factoring out the scaling in
/// `h`. Much slower than [`lubrication_shape_factor`]; it serves as an
/// independent check of it.
pub fn lubrication_direct(geom: &BodyGeometry, h: f64, quad_tol: f64) -> Result<f64> {
    geom.validate()?;
    check_distance(h)?;
    if geom.dim == 3 && geom.alpha <= 1.0 / 3.0 {
        return Err(Error::DivergentIntegral { alpha: geom.alpha, dim: 3 });
    }
    let p = 1.0 + geom.alpha;
    let gamma = geom.gamma;
    // radius where the profile term reaches h: a breakpoint, nothing more
    let split = (h / gamma).powf(1.0 / p);
    let inner_settings = QuadSettings { rel_tol: 1e-3 * quad_tol, abs_tol: 0.0, max_intervals: 4000 };
    let outer_settings = QuadSettings { rel_tol: 0.5 * quad_tol, abs_tol: 0.0, max_intervals: 4000 };
    let density = |r: f64| r / geom.gap(h, r).powi(3);
    let inner_beta = 3.0 * p - 1.0;
    let err_cell = std::cell::RefCell::new(None);
    // ∫_r^∞ r' / g(r')^3 dr'
    let inner = |r: f64| -> f64 {
        let res = if r < split {
            quadrature::integrate(density, r, split, inner_settings)
                .and_then(|near| Ok(near.value + tail_integral(density, split, inner_beta, inner_settings)?))
        } else {
            tail_integral(density, r, inner_beta, inner_settings)
        };
        match res {
            Ok(v) => v,
            Err(e) => {
                err_cell.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let (weight, outer_beta, prefactor): (Box<dyn Fn(f64) -> f64>, f64, f64) = match geom.dim {
        2 => (Box::new(|_| 1.0), 3.0 * p - 2.0, 24.0),
        _ => (Box::new(|r| r), 3.0 * p - 3.0, 12.0 * PI),
    };
    let outer = |r: f64| weight(r) * inner(r);
    let near = quadrature::integrate(outer, 0.0, split, outer_settings);
    let far = tail_integral(outer, split, outer_beta, outer_settings);
    if let Some(e) = err_cell.into_inner() {
        return Err(e);
    }
    Ok(prefactor * (near?.value + far?))
}

/// Lubrication drag with its quadrature coefficient computed on first use.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LubricationDrag {
    pub geom: BodyGeometry,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
    #[serde(skip)]
    coefficient: OnceLock<std::result::Result<f64, Error>>,
}

fn default_quad_tol() -> f64 {
    DEFAULT_QUAD_TOL
}

impl LubricationDrag {
    pub fn new(geom: BodyGeometry, quad_tol: f64) -> Self {
        LubricationDrag {
            geom,
            quad_tol,
            coefficient: OnceLock::new(),
        }
    }

    pub fn coefficient(&self) -> Result<f64> {
        self.coefficient
            .get_or_init(|| lubrication_coefficient(&self.geom, self.quad_tol))
            .clone()
    }

    pub fn evaluate(&self, h: f64) -> Result<f64> {
        check_distance(h)?;
        Ok(self.coefficient()? * power(h, lubrication_exponent(&self.geom))?)
    }
}

impl PartialEq for LubricationDrag {
    fn eq(&self, other: &Self) -> bool {
        self.geom == other.geom && self.quad_tol == other.quad_tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum DragLaw {
    /// `(c1 h^(-c2 xi - 3/2) + c3) / M`.
    PowerLawCoupled {
        c1: f64,
        c2: f64,
        c3: f64,
        #[serde(rename = "M")]
        shell_mass: f64,
    },
    /// `h^(-c xi - 3/2)`.
    PrototypeD1 { c: f64 },
    /// `h^(-max(xi, 0) - 1)`.
    PrototypeD2,
    /// `C h^(-alpha)`, independent of `xi`.
    RigidPower {
        #[serde(rename = "C")]
        coefficient: f64,
        alpha: f64,
    },
    LubricationQuadrature(LubricationDrag),
    AnalyticBall {
        #[serde(rename = "R")]
        radius: f64,
        dim: u8,
    },
}

impl DragLaw {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(name, "must be finite and > 0"))
            }
        };
        let nonnegative = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(name, "must be finite and >= 0"))
            }
        };
        match self {
            DragLaw::PowerLawCoupled { c1, c2, c3, shell_mass } => {
                positive("c1", *c1)?;
                nonnegative("c2", *c2)?;
                nonnegative("c3", *c3)?;
                positive("M", *shell_mass)
            }
            DragLaw::PrototypeD1 { c } => positive("c", *c),
            DragLaw::PrototypeD2 => Ok(()),
            DragLaw::RigidPower { coefficient, alpha } => {
                positive("C", *coefficient)?;
                if *alpha >= 1.0 && alpha.is_finite() {
                    Ok(())
                } else {
                    Err(Error::validation("alpha", "rigid power exponent must be >= 1"))
                }
            }
            DragLaw::LubricationQuadrature(lub) => {
                lub.geom.validate()?;
                if lub.geom.dim == 3 && lub.geom.alpha <= 1.0 / 3.0 {
                    return Err(Error::DivergentIntegral {
                        alpha: lub.geom.alpha,
                        dim: 3,
                    });
                }
                if lub.quad_tol > 0.0 && lub.quad_tol < 1.0 {
                    Ok(())
                } else {
                    Err(Error::validation("quad_tol", "must lie in (0, 1)"))
                }
            }
            DragLaw::AnalyticBall { radius, dim } => {
                positive("R", *radius)?;
                if *dim == 2 || *dim == 3 {
                    Ok(())
                } else {
                    Err(Error::validation("dim", "dimension must be 2 or 3"))
                }
            }
        }
    }

    /// Shape factor at distance `h > 0` and elongation `xi`.
    pub fn evaluate(&self, h: f64, xi: f64) -> Result<f64> {
        check_distance(h)?;
        match self {
            DragLaw::PowerLawCoupled { c1, c2, c3, shell_mass } => {
                Ok((c1 * power(h, -c2 * xi - 1.5)? + c3) / shell_mass)
            }
            DragLaw::PrototypeD1 { c } => power(h, -c * xi - 1.5),
            DragLaw::PrototypeD2 => power(h, -xi.max(0.0) - 1.0),
            DragLaw::RigidPower { coefficient, alpha } => Ok(coefficient * power(h, -alpha)?),
            DragLaw::LubricationQuadrature(lub) => lub.evaluate(h),
            DragLaw::AnalyticBall { radius, dim } => analytic_ball(*radius, h, *dim),
        }
    }
}

/// Shape factor together with its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DragGradient {
    pub value: f64,
    pub d_h: f64,
    pub d_xi: f64,
}

impl DragLaw {
    /// [`DragLaw::evaluate`] plus `∂D/∂h` and `∂D/∂xi` (one-sided at the kink of
    /// [`DragLaw::PrototypeD2`]).
    pub fn evaluate_with_gradient(&self, h: f64, xi: f64) -> Result<DragGradient> {
        check_distance(h)?;
        let ln_h = h.ln();
        match self {
            DragLaw::PowerLawCoupled { c1, c2, c3, shell_mass } => {
                let e = -c2 * xi - 1.5;
                let p = power(h, e)?;
                Ok(DragGradient {
                    value: (c1 * p + c3) / shell_mass,
                    d_h: c1 * e * p / h / shell_mass,
                    d_xi: -c1 * c2 * p * ln_h / shell_mass,
                })
            }
            DragLaw::PrototypeD1 { c } => {
                let e = -c * xi - 1.5;
                let p = power(h, e)?;
                Ok(DragGradient { value: p, d_h: e * p / h, d_xi: -c * p * ln_h })
            }
            DragLaw::PrototypeD2 => {
                let e = -xi.max(0.0) - 1.0;
                let p = power(h, e)?;
                let d_xi = if xi > 0.0 { -p * ln_h } else { 0.0 };
                Ok(DragGradient { value: p, d_h: e * p / h, d_xi })
            }
            DragLaw::RigidPower { coefficient, alpha } => {
                let p = coefficient * power(h, -alpha)?;
                Ok(DragGradient { value: p, d_h: -alpha * p / h, d_xi: 0.0 })
            }
            DragLaw::LubricationQuadrature(lub) => {
                let e = lubrication_exponent(&lub.geom);
                let p = lub.evaluate(h)?;
                Ok(DragGradient { value: p, d_h: e * p / h, d_xi: 0.0 })
            }
            DragLaw::AnalyticBall { radius, dim } => {
                let p = analytic_ball(*radius, h, *dim)?;
                let e = if *dim == 2 { -1.5 } else { -1.0 };
                Ok(DragGradient { value: p, d_h: e * p / h, d_xi: 0.0 })
            }
        }
    }
}

fn check_distance(h: f64) -> Result<()> {
    if h > 0.0 {
        Ok(())
    } else {
        Err(Error::NonpositiveDistance { h })
    }
}

/// `base^exponent` through the logarithm, refusing results that leave the
/// normal floating-point range.
fn power(base: f64, exponent: f64) -> Result<f64> {
    let ln = exponent * base.ln();
    if !ln.is_finite() || ln > f64::MAX.ln() || ln < f64::MIN_POSITIVE.ln() {
        return Err(Error::Overflow { base, exponent });
    }
    Ok(ln.exp())
}

// ---------------------------------------------------------------------------
// Assumption audit
// ---------------------------------------------------------------------------

/// Constants entering the drag assumptions being audited.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditParams {
    /// `c` and `alpha` of the lower bound `D(h, xi) >= c h^(-alpha)`.
    pub c_lower: f64,
    pub alpha_lower: f64,
    /// `delta_1`, `c_1`, `gamma_1` of `D(h, -delta_1) >= c_1 h^(-gamma_1)`.
    pub delta1: f64,
    pub c1: f64,
    pub gamma1: f64,
    /// `delta_2` of `D(h, -delta_2) <= gamma(h) h^(-gamma_1)`.
    pub delta2: f64,
    /// Lower integration floor for `∫ gamma(y) / y dy`.
    pub floor: f64,
}

impl Default for AuditParams {
    fn default() -> Self {
        AuditParams {
            c_lower: 1.0,
            alpha_lower: 1.0,
            delta1: 0.01,
            c1: 1.0,
            gamma1: 1.0,
            delta2: 0.02,
            floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Assumption {
    /// `D` positive and locally Lipschitz on the grid.
    D1,
    /// Uniform singular lower bound.
    D2,
    /// Monotone non-decreasing in `xi`.
    D4,
    /// Lower bound at `xi = -delta_1`.
    D5,
    /// Vanishing of `∫_0^h gamma(y)/y dy`.
    D6,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AuditStatus {
    Pass,
    Fail { witness: Witness },
}

/// Grid point at which an assumption was found violated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub h: f64,
    pub xi: f64,
    /// Second elongation for pairwise checks (monotonicity).
    pub xi_other: Option<f64>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub assumption: Assumption,
    pub status: AuditStatus,
}

impl AssumptionCheck {
    pub fn passed(&self) -> bool {
        self.status == AuditStatus::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub checks: Vec<AssumptionCheck>,
    /// `(h, ∫_floor^h gamma(y)/y dy)` in decreasing `h`.
    pub d6_trend: Vec<(f64, f64)>,
    /// Fitted log-log slope of the `d6_trend` integral against `h`.
    pub d6_slope: Option<f64>,
}

impl AuditReport {
    pub fn check(&self, which: Assumption) -> &AssumptionCheck {
        self.checks
            .iter()
            .find(|c| c.assumption == which)
            .expect("every assumption is audited")
    }
}

impl std::fmt::Display for AuditReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            match &c.status {
                AuditStatus::Pass => writeln!(f, "{:?}: PASS", c.assumption)?,
                AuditStatus::Fail { witness } => writeln!(
                    f,
                    "{:?}: FAIL at h = {:e}, xi = {}{}: {}",
                    c.assumption,
                    witness.h,
                    witness.xi,
                    witness.xi_other.map(|x| format!(" vs xi = {x}")).unwrap_or_default(),
                    witness.message
                )?,
            }
        }
        write!(f, "D6 trend:")?;
        // a handful of evenly spaced points is enough to read the trend
        let n = self.d6_trend.len();
        let shown = n.min(6);
        for j in 0..shown {
            let i = if shown > 1 { j * (n - 1) / (shown - 1) } else { 0 };
            let (h, v) = self.d6_trend[i];
            write!(f, " ({h:.3e}, {v:.4e})")?;
        }
        if let Some(slope) = self.d6_slope {
            write!(f, "; fitted slope {slope:.4}")?;
        }
        writeln!(f)
    }
}

fn fail(h: f64, xi: f64, xi_other: Option<f64>, message: impl Into<String>) -> AuditStatus {
    AuditStatus::Fail {
        witness: Witness {
            h,
            xi,
            xi_other,
            message: message.into(),
        },
    }
}

const AUDIT_SLACK: f64 = 1e-12;

/// Checks the drag assumptions pointwise on `h_grid x xi_grid`.
pub fn assumption_audit(law: &DragLaw, h_grid: &[f64], xi_grid: &[f64], params: &AuditParams) -> AuditReport {
    let mut xis: Vec<f64> = xi_grid.to_vec();
    xis.sort_by(f64::total_cmp);
    let mut hs: Vec<f64> = h_grid.to_vec();
    hs.sort_by(f64::total_cmp);

    let checks = vec![
        AssumptionCheck { assumption: Assumption::D1, status: audit_regularity(law, &hs, &xis) },
        AssumptionCheck { assumption: Assumption::D2, status: audit_lower_bound(law, &hs, &xis, params) },
        AssumptionCheck { assumption: Assumption::D4, status: audit_monotone(law, &hs, &xis) },
        AssumptionCheck { assumption: Assumption::D5, status: audit_shifted_lower(law, &hs, params) },
    ];
    let (d6_status, d6_trend, d6_slope) = audit_vanishing(law, &hs, params);
    let mut checks = checks;
    checks.push(AssumptionCheck { assumption: Assumption::D6, status: d6_status });
    AuditReport { checks, d6_trend, d6_slope }
}

fn audit_regularity(law: &DragLaw, hs: &[f64], xis: &[f64]) -> AuditStatus {
    for &h in hs {
        for &xi in xis {
            match law.evaluate(h, xi) {
                Ok(d) if d > 0.0 && d.is_finite() => {}
                Ok(d) => return fail(h, xi, None, format!("D = {d} is not positive and finite")),
                Err(e) => return fail(h, xi, None, e.to_string()),
            }
            // difference quotients must stay finite
            let dh = 1e-6 * h;
            let dx = 1e-6;
            let quotients = law.evaluate(h + dh, xi).and_then(|a| {
                let b = law.evaluate(h, xi + dx)?;
                let c = law.evaluate(h, xi)?;
                Ok([(a - c) / dh, (b - c) / dx])
            });
            match quotients {
                Ok(q) if q.iter().all(|v| v.is_finite()) => {}
                Ok(_) => return fail(h, xi, None, "difference quotient not finite"),
                Err(e) => return fail(h, xi, None, e.to_string()),
            }
        }
    }
    AuditStatus::Pass
}

fn audit_lower_bound(law: &DragLaw, hs: &[f64], xis: &[f64], p: &AuditParams) -> AuditStatus {
    for &h in hs {
        let bound = p.c_lower * h.powf(-p.alpha_lower);
        for &xi in xis {
            match law.evaluate(h, xi) {
                Ok(d) if d >= bound * (1.0 - AUDIT_SLACK) => {}
                Ok(d) => return fail(h, xi, None, format!("D = {d:e} below c h^-alpha = {bound:e}")),
                Err(e) => return fail(h, xi, None, e.to_string()),
            }
        }
    }
    AuditStatus::Pass
}

fn audit_monotone(law: &DragLaw, hs: &[f64], xis: &[f64]) -> AuditStatus {
    for &h in hs {
        let mut prev: Option<(f64, f64)> = None;
        for &xi in xis {
            let d = match law.evaluate(h, xi) {
                Ok(d) => d,
                Err(e) => return fail(h, xi, None, e.to_string()),
            };
            if let Some((xi_prev, d_prev)) = prev {
                if d_prev > d * (1.0 + AUDIT_SLACK) {
                    return fail(
                        h,
                        xi_prev,
                        Some(xi),
                        format!("D decreases from {d_prev:e} to {d:e}"),
                    );
                }
            }
            prev = Some((xi, d));
        }
    }
    AuditStatus::Pass
}

fn audit_shifted_lower(law: &DragLaw, hs: &[f64], p: &AuditParams) -> AuditStatus {
    let xi = -p.delta1;
    for &h in hs {
        let bound = p.c1 * h.powf(-p.gamma1);
        match law.evaluate(h, xi) {
            Ok(d) if d >= bound * (1.0 - AUDIT_SLACK) => {}
            Ok(d) => return fail(h, xi, None, format!("D = {d:e} below c1 h^-gamma1 = {bound:e}")),
            Err(e) => return fail(h, xi, None, e.to_string()),
        }
    }
    AuditStatus::Pass
}

/// Takes the tightest admissible `gamma(h) = D(h, -delta_2) h^gamma_1`, integrates
/// `gamma(y)/y` from the floor up to each grid point and inspects the trend as
/// `h` decreases.
fn audit_vanishing(law: &DragLaw, hs: &[f64], p: &AuditParams) -> (AuditStatus, Vec<(f64, f64)>, Option<f64>) {
    let xi = -p.delta2;
    let floor = p.floor;
    let envelope = |ln_y: f64| -> f64 {
        let y = ln_y.exp();
        law.evaluate(y, xi).map(|d| d * y.powf(p.gamma1)).unwrap_or(f64::NAN)
    };
    let mut trend = Vec::new();
    for &h in hs.iter().rev().filter(|&&h| h > floor) {
        // ∫ gamma(y)/y dy = ∫ gamma(e^s) ds
        let value = quadrature::integrate(envelope, floor.ln(), h.ln(), QuadSettings::relative(1e-8))
            .map(|q| q.value)
            .unwrap_or(f64::NAN);
        if !value.is_finite() {
            return (fail(h, xi, None, "integral of gamma(y)/y is not finite"), trend, None);
        }
        trend.push((h, value));
    }
    for w in trend.windows(2) {
        let ((_h_hi, v_hi), (h_lo, v_lo)) = (w[0], w[1]);
        if v_lo > v_hi * (1.0 + AUDIT_SLACK) {
            return (
                fail(h_lo, xi, None, format!("integral grows from {v_hi:e} to {v_lo:e} as h decreases")),
                trend,
                None,
            );
        }
    }
    let slope = fit_loglog_slope(&trend);
    let status = match slope {
        Some(s) if s > 0.0 => AuditStatus::Pass,
        Some(s) => fail(hs[0], xi, None, format!("fitted slope {s:.4} does not indicate decay")),
        None => AuditStatus::Pass,
    };
    (status, trend, slope)
}

/// Least-squares slope of `log y` against `log x` over positive points.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}
