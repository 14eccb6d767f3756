//! Event location on the dense output of a [`Trajectory`].
//!
//! Sign changes are bracketed on a fixed subdivision of every accepted step
//! and refined by bisection, which needs nothing from the interpolant but
//! continuity.

use super::{Component, Trajectory};
use crate::model::State;
use serde::Serialize;

/// Width below which a bracketing interval is accepted as the event time.
pub const ROOT_TOL: f64 = 1e-12;

/// Sub-intervals per step scanned for sign changes.
const SCAN_DIVISIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// Global minimum of `h`.
    MinDistance,
    /// Sign change of `h'`.
    ZeroVelocity,
    /// Crossing of `h = level`.
    ThresholdCrossing { level: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub kind: EventKind,
    pub t: f64,
    pub state: State,
}

/// All events of the requested kinds, grouped by kind in request order and
/// sorted by time within each kind.
pub fn locate_events(traj: &Trajectory, kinds: &[EventKind]) -> Vec<Event> {
    let mut out = Vec::new();
    for &kind in kinds {
        let times = match kind {
            EventKind::MinDistance => vec![min_distance_time(traj)],
            EventKind::ZeroVelocity => crossings(traj, Component::HDot, 0.0),
            EventKind::ThresholdCrossing { level } => crossings(traj, Component::H, level),
        };
        out.extend(times.into_iter().map(|t| Event {
            kind,
            t,
            state: traj.interpolate(t),
        }));
    }
    out
}

/// The [`EventKind::MinDistance`] event.
pub fn min_distance(traj: &Trajectory) -> Event {
    let t = min_distance_time(traj);
    Event {
        kind: EventKind::MinDistance,
        t,
        state: traj.interpolate(t),
    }
}

/// Times at which `component - level` changes sign, refined to [`ROOT_TOL`].
pub fn crossings(traj: &Trajectory, component: Component, level: f64) -> Vec<f64> {
    directed_crossings(traj, component, level).into_iter().map(|(t, _)| t).collect()
}

/// Like [`crossings`], with `true` marking an upward crossing.
pub fn directed_crossings(traj: &Trajectory, component: Component, level: f64) -> Vec<(f64, bool)> {
    let mut out = Vec::new();
    let f = |t: f64| traj.component_at(t, component) - level;
    let times = traj.times();
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let mut ta = t0;
        let mut fa = f(ta);
        for j in 1..=SCAN_DIVISIONS {
            let tb = if j == SCAN_DIVISIONS {
                t1
            } else {
                t0 + (t1 - t0) * j as f64 / SCAN_DIVISIONS as f64
            };
            let fb = f(tb);
            if (fa < 0.0) != (fb < 0.0) {
                out.push((bisect(&f, ta, tb, fa), fa < 0.0));
            }
            ta = tb;
            fa = fb;
        }
    }
    out
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, fa: f64) -> f64 {
    let negative_at_a = fa < 0.0;
    while b - a > ROOT_TOL {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m) < 0.0) == negative_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn min_distance_time(traj: &Trajectory) -> f64 {
    let mut best_t = traj.t_start();
    let mut best_h = f64::INFINITY;
    for s in traj.samples() {
        if s.state.h < best_h {
            best_h = s.state.h;
            best_t = s.state.t;
        }
    }
    // interior minima sit where h' turns from negative to positive
    for (t, rising) in directed_crossings(traj, Component::HDot, 0.0) {
        if rising {
            let h = traj.component_at(t, Component::H);
            if h < best_h {
                best_h = h;
                best_t = t;
            }
        }
    }
    best_t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drag::DragLaw;
    use crate::integrator::{Sample, Trajectory};
    use crate::model::{Mode, ModelConfig, SpringParams};
    use approx::assert_abs_diff_eq;

    fn synthetic(f: impl Fn(f64) -> (f64, f64), n: usize, t_end: f64) -> Trajectory {
        let cfg = ModelConfig {
            spring: SpringParams::new(1.0, 1.0, 0.0).unwrap(),
            drag: DragLaw::RigidPower { coefficient: 1.0, alpha: 1.5 },
            mu: 1e-300,
            initial: State::at_rest(1.0),
            mode: Mode::RigidBody,
        };
        let samples: Vec<Sample> = (0..n)
            .map(|i| {
                let t = t_end * i as f64 / (n - 1) as f64;
                let (h, h_dot) = f(t);
                Sample { state: State { t, h, h_dot, xi: 0.0, xi_dot: 0.0 }, ledger: 0.0 }
            })
            .collect();
        Trajectory::from_samples(cfg, &samples).unwrap()
    }

    #[test]
    fn parabola_minimum_and_crossings() {
        // h = 1 + (t - 0.3)^2 sampled coarsely; the h interpolant is exact for
        // quadratics, the h' one only matches at the samples
        let traj = synthetic(|t| (1.0 + (t - 0.3).powi(2), 2.0 * (t - 0.3)), 7, 1.0);
        let ev = min_distance(&traj);
        assert!(ev.t > 1.0 / 6.0 && ev.t < 1.0 / 3.0);
        assert_abs_diff_eq!(ev.state.h_dot, 0.0, epsilon = 1e-10);
        assert!(ev.state.h < traj.samples().map(|s| s.state.h).fold(f64::INFINITY, f64::min));
        assert_abs_diff_eq!(ev.state.h, 1.0, epsilon = 1e-3);
        let up = directed_crossings(&traj, Component::H, 1.04);
        assert_eq!(up.len(), 2);
        assert_abs_diff_eq!(up[0].0, 0.1, epsilon = 1e-11);
        assert_abs_diff_eq!(up[1].0, 0.5, epsilon = 1e-11);
        assert!(!up[0].1 && up[1].1);
        let zero_v = locate_events(&traj, &[EventKind::ZeroVelocity]);
        assert_eq!(zero_v.len(), 1);
    }

    #[test]
    fn monotone_trajectory_has_minimum_at_end() {
        let traj = synthetic(|t| (2.0 - t, -1.0), 5, 1.0);
        let ev = locate_events(&traj, &[EventKind::MinDistance, EventKind::ZeroVelocity]);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].t, 1.0);
    }

    #[test]
    fn no_events_gives_empty_list() {
        let traj = synthetic(|t| (2.0 - t, -1.0), 5, 1.0);
        assert!(locate_events(&traj, &[EventKind::ThresholdCrossing { level: 5.0 }]).is_empty());
    }
}
