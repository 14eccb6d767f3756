//! Domain types of the reduced shell model and the coupled right-hand side.
//!
//! The shell (mass `M`) sits at distance `h` from the wall; an internal mass
//! `m` hangs on a linear spring of stiffness `k` with elongation `xi`. In the
//! normalized form
//!
//! ```text
//! h'' - xi'' = a b(xi)
//! h''        = -b(xi) - mu D(h, xi) h'
//! ```
//!
//! with `b(xi) = k xi / M` and `a = M / m`.

use crate::drag::DragLaw;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpringParams {
    /// Shell mass `M` (kg).
    pub shell_mass: f64,
    /// Internal mass `m` (kg).
    pub internal_mass: f64,
    /// Spring stiffness `k` (N/m).
    pub stiffness: f64,
}

impl SpringParams {
    pub fn new(shell_mass: f64, internal_mass: f64, stiffness: f64) -> Result<Self> {
        let p = SpringParams {
            shell_mass,
            internal_mass,
            stiffness,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shell_mass > 0.0 && self.shell_mass.is_finite()) {
            return Err(Error::validation("M", "shell mass must be finite and > 0"));
        }
        if !(self.internal_mass > 0.0 && self.internal_mass.is_finite()) {
            return Err(Error::validation("m", "internal mass must be finite and > 0"));
        }
        if !(self.stiffness >= 0.0 && self.stiffness.is_finite()) {
            return Err(Error::validation("k", "stiffness must be finite and >= 0"));
        }
        let a = self.mass_ratio();
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::validation("M/m", "mass ratio must be finite and > 0"));
        }
        Ok(())
    }

    /// `a = M / m`.
    pub fn mass_ratio(&self) -> f64 {
        self.shell_mass / self.internal_mass
    }

    /// Circular frequency of the internal mass against a clamped shell, `sqrt(k/m)`.
    pub fn clamped_frequency(&self) -> f64 {
        (self.stiffness / self.internal_mass).sqrt()
    }

    /// Circular frequency of the free two-body oscillation, `sqrt((1+a) k / M)`.
    pub fn free_frequency(&self) -> f64 {
        ((1.0 + self.mass_ratio()) * self.stiffness / self.shell_mass).sqrt()
    }
}

/// `b(xi) = k xi / M`.
pub fn spring_force(xi: f64, p: &SpringParams) -> f64 {
    p.stiffness * xi / p.shell_mass
}

/// `B(y) = k y^2 / (2M)`, the primitive of [`spring_force`] vanishing at 0.
pub fn spring_energy(y: f64, p: &SpringParams) -> f64 {
    0.5 * p.stiffness * y * y / p.shell_mass
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub h: f64,
    pub h_dot: f64,
    pub xi: f64,
    pub xi_dot: f64,
}

impl State {
    pub fn at_rest(h: f64) -> Self {
        State {
            t: 0.0,
            h,
            h_dot: 0.0,
            xi: 0.0,
            xi_dot: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Shell and internal spring coupled through the drag law.
    Coupled,
    /// Single rigid body, `m h'' = -mu D(h) h'`; the spring is inert.
    RigidBody,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub spring: SpringParams,
    pub drag: DragLaw,
    /// Dynamic viscosity (Pa·s).
    pub mu: f64,
    pub initial: State,
    pub mode: Mode,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.spring.validate()?;
        self.drag.validate()?;
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::validation("mu", "viscosity must be finite and > 0"));
        }
        let s = &self.initial;
        if !(s.h > 0.0 && s.h.is_finite()) {
            return Err(Error::validation("h0", "initial distance must be finite and > 0"));
        }
        if !(s.t >= 0.0 && s.t.is_finite()) {
            return Err(Error::validation("t0", "initial time must be finite and >= 0"));
        }
        for (name, v) in [("hdot0", s.h_dot), ("xi0", s.xi), ("xidot0", s.xi_dot)] {
            if !v.is_finite() {
                return Err(Error::validation(name, "must be finite"));
            }
        }
        if self.mode == Mode::RigidBody && (s.xi != 0.0 || s.xi_dot != 0.0) {
            return Err(Error::validation(
                "xi0",
                "rigid-body mode requires xi0 = xidot0 = 0",
            ));
        }
        Ok(())
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        ModelConfig {
            mu,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub dh: f64,
    pub dh_dot: f64,
    pub dxi: f64,
    pub dxi_dot: f64,
}

/// Right-hand side of the model ODE.
pub fn rhs(s: &State, cfg: &ModelConfig) -> Result<Derivative> {
    if !(s.h > 0.0) {
        return Err(Error::NonpositiveDistance { h: s.h });
    }
    match cfg.mode {
        Mode::Coupled => {
            let p = &cfg.spring;
            let b = spring_force(s.xi, p);
            let d = cfg.drag.evaluate(s.h, s.xi)?;
            let dh_dot = -b - cfg.mu * d * s.h_dot;
            Ok(Derivative {
                dh: s.h_dot,
                dh_dot,
                dxi: s.xi_dot,
                dxi_dot: dh_dot - p.mass_ratio() * b,
            })
        }
        Mode::RigidBody => {
            let d = cfg.drag.evaluate(s.h, 0.0)?;
            Ok(Derivative {
                dh: s.h_dot,
                dh_dot: -(cfg.mu / cfg.spring.internal_mass) * d * s.h_dot,
                dxi: 0.0,
                dxi_dot: 0.0,
            })
        }
    }
}

/// `F = (h' - xi')^2 + a h'^2 + 2a B(xi)`.
pub fn energy(s: &State, cfg: &ModelConfig) -> f64 {
    let p = &cfg.spring;
    let a = p.mass_ratio();
    let rel = s.h_dot - s.xi_dot;
    rel * rel + a * s.h_dot * s.h_dot + 2.0 * a * spring_energy(s.xi, p)
}

/// Rate `-dF/dt` at which the drag removes energy; the integral of this rate
/// closes the energy balance `F(t) + ledger(t) = F(0)`.
///
/// Coupled mode: `2 a mu D h'^2`. Rigid-body mode, where `F = (1+a) h'^2`
/// and the drag is divided by `m`: `2 (1+a) (mu/m) D h'^2`.
pub fn dissipation_rate(s: &State, cfg: &ModelConfig) -> Result<f64> {
    if !(s.h > 0.0) {
        return Err(Error::NonpositiveDistance { h: s.h });
    }
    let a = cfg.spring.mass_ratio();
    let v2 = s.h_dot * s.h_dot;
    match cfg.mode {
        Mode::Coupled => Ok(2.0 * a * cfg.mu * cfg.drag.evaluate(s.h, s.xi)? * v2),
        Mode::RigidBody => {
            let d = cfg.drag.evaluate(s.h, 0.0)?;
            Ok(2.0 * (1.0 + a) * cfg.mu / cfg.spring.internal_mass * d * v2)
        }
    }
}

/// [`rhs`] and [`dissipation_rate`] from a single drag evaluation.
pub fn rhs_with_dissipation(s: &State, cfg: &ModelConfig) -> Result<(Derivative, f64)> {
    if !(s.h > 0.0) {
        return Err(Error::NonpositiveDistance { h: s.h });
    }
    let p = &cfg.spring;
    let a = p.mass_ratio();
    let v2 = s.h_dot * s.h_dot;
    match cfg.mode {
        Mode::Coupled => {
            let b = spring_force(s.xi, p);
            let d = cfg.drag.evaluate(s.h, s.xi)?;
            let dh_dot = -b - cfg.mu * d * s.h_dot;
            let deriv = Derivative {
                dh: s.h_dot,
                dh_dot,
                dxi: s.xi_dot,
                dxi_dot: dh_dot - a * b,
            };
            Ok((deriv, 2.0 * a * cfg.mu * d * v2))
        }
        Mode::RigidBody => {
            let damping = cfg.mu / p.internal_mass * cfg.drag.evaluate(s.h, 0.0)?;
            let deriv = Derivative {
                dh: s.h_dot,
                dh_dot: -damping * s.h_dot,
                dxi: 0.0,
                dxi_dot: 0.0,
            };
            Ok((deriv, 2.0 * (1.0 + a) * damping * v2))
        }
    }
}

/// Jacobian of `(h', h'', xi', xi'', ledger')` with respect to
/// `(h, h', xi, xi', ledger)`, row per output.
pub fn jacobian(s: &State, cfg: &ModelConfig) -> Result<[[f64; 5]; 5]> {
    let p = &cfg.spring;
    let a = p.mass_ratio();
    let v = s.h_dot;
    let mut j = [[0.0; 5]; 5];
    j[0][1] = 1.0;
    match cfg.mode {
        Mode::Coupled => {
            let g = cfg.drag.evaluate_with_gradient(s.h, s.xi)?;
            let kb = p.stiffness / p.shell_mass;
            let mu = cfg.mu;
            j[1] = [-mu * g.d_h * v, -mu * g.value, -kb - mu * g.d_xi * v, 0.0, 0.0];
            j[2][3] = 1.0;
            j[3] = j[1];
            j[3][2] -= a * kb;
            let r = 2.0 * a * mu;
            j[4] = [r * g.d_h * v * v, 2.0 * r * g.value * v, r * g.d_xi * v * v, 0.0, 0.0];
        }
        Mode::RigidBody => {
            let g = cfg.drag.evaluate_with_gradient(s.h, 0.0)?;
            let damping = cfg.mu / p.internal_mass;
            j[1][0] = -damping * g.d_h * v;
            j[1][1] = -damping * g.value;
            let r = 2.0 * (1.0 + a) * damping;
            j[4][0] = r * g.d_h * v * v;
            j[4][1] = 2.0 * r * g.value * v;
        }
    }
    Ok(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadSettings};
    use approx::assert_relative_eq;

    fn canonical_spring() -> SpringParams {
        SpringParams::new(1.0, 8.2, 10_000.0).unwrap()
    }

    fn coupled(mu: f64, initial: State) -> ModelConfig {
        ModelConfig {
            spring: canonical_spring(),
            drag: DragLaw::PowerLawCoupled {
                c1: 0.1,
                c2: 20.0,
                c3: 7.4,
                shell_mass: 1.0,
            },
            mu,
            initial,
            mode: Mode::Coupled,
        }
    }

    #[test]
    fn spring_force_values() {
        let p = SpringParams::new(1.0, 1.0, 10_000.0).unwrap();
        assert_eq!(spring_force(0.0, &p), 0.0);
        assert_eq!(spring_force(1.0, &p), 10_000.0);
        assert_relative_eq!(spring_force(-0.005, &p), -50.0, max_relative = 1e-15);
        assert_eq!(spring_force(-0.3, &p), -spring_force(0.3, &p));
    }

    #[test]
    fn spring_energy_values() {
        let p = canonical_spring();
        assert_eq!(spring_energy(0.0, &p), 0.0);
        assert_relative_eq!(spring_energy(0.01, &p), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn spring_energy_matches_quadrature_of_force() {
        let p = canonical_spring();
        for y in [-0.02, -0.003, 0.001, 0.014, 0.5] {
            let q = integrate(|w| spring_force(w, &p), 0.0, y, QuadSettings::relative(1e-12)).unwrap();
            assert_relative_eq!(spring_energy(y, &p), q.value, max_relative = 1e-12);
        }
    }

    #[test]
    fn invalid_spring_rejected() {
        assert!(SpringParams::new(0.0, 1.0, 1.0).is_err());
        assert!(SpringParams::new(1.0, -1.0, 1.0).is_err());
        assert!(SpringParams::new(1.0, 1.0, -1.0).is_err());
        assert!(SpringParams::new(1.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn rhs_at_equilibrium_vanishes() {
        let cfg = coupled(0.1, State::at_rest(1.0));
        let d = rhs(&cfg.initial, &cfg).unwrap();
        assert_eq!(d, Derivative { dh: 0.0, dh_dot: 0.0, dxi: 0.0, dxi_dot: 0.0 });
    }

    #[test]
    fn rhs_drag_term_at_unit_distance() {
        let s = State { t: 0.0, h: 1.0, h_dot: -0.5, xi: 0.0, xi_dot: 0.0 };
        let cfg = coupled(0.1, s);
        let d = rhs(&s, &cfg).unwrap();
        assert_relative_eq!(d.dh_dot, 0.375, max_relative = 1e-14);
        assert_eq!(d.dh, -0.5);
    }

    #[test]
    fn rhs_zero_viscosity_limit() {
        // mu is validated > 0 for runs, but the formula itself is checked at mu = 0
        let s = State { t: 0.0, h: 0.2, h_dot: -0.3, xi: 0.004, xi_dot: 0.1 };
        let cfg = coupled(0.0, s);
        let d = rhs(&s, &cfg).unwrap();
        let b = spring_force(s.xi, &cfg.spring);
        assert_relative_eq!(d.dxi_dot, -(1.0 + cfg.spring.mass_ratio()) * b, max_relative = 1e-15);
    }

    #[test]
    fn rhs_rejects_nonpositive_distance() {
        let mut s = State::at_rest(1.0);
        s.h = 0.0;
        let cfg = coupled(0.1, State::at_rest(1.0));
        assert_eq!(rhs(&s, &cfg), Err(Error::NonpositiveDistance { h: 0.0 }));
        assert!(dissipation_rate(&s, &cfg).is_err());
    }

    #[test]
    fn rigid_mode_divides_by_internal_mass() {
        let s = State { t: 0.0, h: 0.5, h_dot: -0.5, xi: 0.0, xi_dot: 0.0 };
        let mut cfg = coupled(0.2, s);
        cfg.mode = Mode::RigidBody;
        cfg.drag = DragLaw::RigidPower { coefficient: 2.0, alpha: 1.5 };
        let d = rhs(&s, &cfg).unwrap();
        let expected = -(0.2 / 8.2) * 2.0 * 0.5f64.powf(-1.5) * -0.5;
        assert_relative_eq!(d.dh_dot, expected, max_relative = 1e-14);
        assert_eq!((d.dxi, d.dxi_dot), (0.0, 0.0));
    }

    #[test]
    fn energy_values() {
        let cfg = coupled(0.1, State::at_rest(0.3));
        assert_eq!(energy(&State::at_rest(0.3), &cfg), 0.0);
        let s = State { t: 0.0, h: 0.3, h_dot: -0.5, xi: 0.0, xi_dot: 0.0 };
        let a = cfg.spring.mass_ratio();
        assert_relative_eq!(energy(&s, &cfg), (1.0 + a) * 0.25, max_relative = 1e-15);
        assert_relative_eq!(energy(&s, &cfg), 0.280_487_804_878_048_8, max_relative = 1e-12);
    }

    #[test]
    fn energy_rate_balances_dissipation() {
        // dF/dt along the vector field equals minus the dissipation rate
        let s = State { t: 0.0, h: 0.05, h_dot: -0.4, xi: 0.003, xi_dot: 0.2 };
        for mode in [Mode::Coupled, Mode::RigidBody] {
            let mut cfg = coupled(0.05, s);
            cfg.mode = mode;
            let s = if mode == Mode::RigidBody { State { xi: 0.0, xi_dot: 0.0, ..s } } else { s };
            let d = rhs(&s, &cfg).unwrap();
            let p = &cfg.spring;
            let a = p.mass_ratio();
            let df = 2.0 * (s.h_dot - s.xi_dot) * (d.dh_dot - d.dxi_dot)
                + 2.0 * a * s.h_dot * d.dh_dot
                + 2.0 * a * spring_force(s.xi, p) * s.xi_dot;
            let rate = dissipation_rate(&s, &cfg).unwrap();
            assert_relative_eq!(-df, rate, max_relative = 1e-12);
            let (d2, rate2) = rhs_with_dissipation(&s, &cfg).unwrap();
            assert_eq!(d2, d);
            assert_relative_eq!(rate2, rate, max_relative = 1e-15);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let base = State { t: 0.0, h: 0.02, h_dot: -0.3, xi: 0.004, xi_dot: 0.1 };
        for mode in [Mode::Coupled, Mode::RigidBody] {
            let mut cfg = coupled(0.05, base);
            cfg.mode = mode;
            let s = if mode == Mode::RigidBody { State { xi: 0.0, xi_dot: 0.0, ..base } } else { base };
            let field = |s: &State| {
                let (d, r) = rhs_with_dissipation(s, &cfg).unwrap();
                [d.dh, d.dh_dot, d.dxi, d.dxi_dot, r]
            };
            let j = jacobian(&s, &cfg).unwrap();
            let vars = [s.h, s.h_dot, s.xi, s.xi_dot];
            for (col, &x) in vars.iter().enumerate() {
                if mode == Mode::RigidBody && col >= 2 {
                    continue;
                }
                let eps = 1e-6 * x.abs().max(1e-3);
                let shifted = |dx: f64| {
                    let mut v = vars;
                    v[col] += dx;
                    State { t: 0.0, h: v[0], h_dot: v[1], xi: v[2], xi_dot: v[3] }
                };
                let (fp, fm) = (field(&shifted(eps)), field(&shifted(-eps)));
                for row in 0..5 {
                    let fd = (fp[row] - fm[row]) / (2.0 * eps);
                    assert_relative_eq!(j[row][col], fd, max_relative = 1e-5, epsilon = 1e-6);
                }
            }
            assert!(j.iter().all(|r| r[4] == 0.0));
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = coupled(0.1, State::at_rest(0.3));
        assert!(cfg.validate().is_ok());
        cfg.initial.h = -1.0;
        assert!(matches!(cfg.validate(), Err(Error::Validation { field, .. }) if field == "h0"));
        let mut cfg = coupled(0.0, State::at_rest(0.3));
        assert!(cfg.validate().is_err());
        cfg.mu = 0.1;
        cfg.mode = Mode::RigidBody;
        cfg.initial.xi = 0.01;
        assert!(cfg.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn spring_force_is_odd_and_lipschitz(x in -1.0f64..1.0, y in -1.0f64..1.0, k in 0.0f64..1e5, m_shell in 0.1f64..10.0) {
                let p = SpringParams::new(m_shell, 1.0, k).unwrap();
                prop_assert_eq!(spring_force(-x, &p), -spring_force(x, &p));
                let lip = k / m_shell;
                let lhs = (spring_force(x, &p) - spring_force(y, &p)).abs();
                prop_assert!(lhs <= lip * (x - y).abs() * (1.0 + 1e-12) + 1e-300);
                if k > 0.0 && x != 0.0 {
                    prop_assert!(spring_force(x, &p) * x > 0.0);
                }
                prop_assert!(spring_energy(x, &p) >= 0.0);
            }

            #[test]
            fn energy_is_nonnegative(hd in -10.0f64..10.0, xd in -10.0f64..10.0, xi in -1.0f64..1.0) {
                let cfg = coupled(0.1, State::at_rest(1.0));
                let s = State { t: 0.0, h: 1.0, h_dot: hd, xi, xi_dot: xd };
                prop_assert!(energy(&s, &cfg) >= 0.0);
            }
        }
    }
}
