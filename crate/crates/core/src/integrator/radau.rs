//! Three-stage Radau IIA collocation (order 5, stiffly accurate, L-stable).
//!
//! The stage equations are solved by simplified Newton iteration on the full
//! `3 x 5` stage system with the Jacobian frozen at the step start. The error
//! estimate is the filtered embedded formula of order 3,
//! `(I - h g0 J)^{-1} (g0 h f(y0) + e·z)`, where `g0` is the real eigenvalue
//! of the Butcher matrix. Step control and the Newton stopping test follow
//! the usual RADAU5 conventions (Hairer & Wanner), with the tolerances used as
//! given rather than rescaled.

use super::{Attempt, DenseBasis, DenseCoeffs, Field, RetryCause, Scheme, Vector, DENSE_DIM, DIM};
use crate::error::{Error, Result};
use crate::linalg::Lu;
use std::sync::OnceLock;

/// Node `c2 - 1` of the collocation cubic written about the step end.
pub(crate) const S1: f64 = -0.355_051_025_721_682_2;
/// Node `c1 - 1`.
pub(crate) const S2: f64 = -0.844_948_974_278_317_8;

const STAGES: usize = 3;
const NEWTON_MAX: usize = 7;
const SAFETY: f64 = 0.9;
/// Bounds on `h_old / h_new`: growth at most 8, shrink at most 5.
const QUOT_MIN: f64 = 0.125;
const QUOT_MAX: f64 = 5.0;

#[derive(Debug)]
pub(crate) struct Tableau {
    pub c: [f64; STAGES],
    pub a: [[f64; STAGES]; STAGES],
    /// Real eigenvalue of `a`.
    pub gamma0: f64,
    /// Weights on the stage increments in the embedded difference.
    pub e: [f64; STAGES],
}

pub(crate) fn tableau() -> &'static Tableau {
    static TABLEAU: OnceLock<Tableau> = OnceLock::new();
    TABLEAU.get_or_init(build_tableau)
}

fn build_tableau() -> Tableau {
    let s6 = 6f64.sqrt();
    let c = [(4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0];
    let lagrange = |j: usize, x: f64| {
        (0..STAGES)
            .filter(|&m| m != j)
            .map(|m| (x - c[m]) / (c[j] - c[m]))
            .product::<f64>()
    };
    // a_ij = ∫_0^{c_i} l_j, exact with three Gauss–Legendre points
    let gl = [(-(0.6f64).sqrt(), 5.0 / 9.0), (0.0, 8.0 / 9.0), ((0.6f64).sqrt(), 5.0 / 9.0)];
    let mut a = [[0.0; STAGES]; STAGES];
    for i in 0..STAGES {
        for (j, aij) in a[i].iter_mut().enumerate() {
            let half = 0.5 * c[i];
            *aij = gl.iter().map(|&(x, w)| w * half * lagrange(j, half * (1.0 + x))).sum();
        }
    }
    let lu = Lu::factor(a).expect("Radau matrix is nonsingular");
    let mut a_inv = [[0.0; STAGES]; STAGES];
    for col in 0..STAGES {
        let mut unit = [0.0; STAGES];
        unit[col] = 1.0;
        let x = lu.solve(&unit);
        for row in 0..STAGES {
            a_inv[row][col] = x[row];
        }
    }

    // real root of det(λ I - a) by Newton from the right
    let tr = a[0][0] + a[1][1] + a[2][2];
    let minors = a[0][0] * a[1][1] - a[0][1] * a[1][0] + a[0][0] * a[2][2] - a[0][2] * a[2][0] + a[1][1] * a[2][2]
        - a[1][2] * a[2][1];
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    let mut g = 0.3;
    for _ in 0..50 {
        let p = ((g - tr) * g + minors) * g - det;
        let dp = (3.0 * g - 2.0 * tr) * g + minors;
        g -= p / dp;
    }

    // embedded weights: gamma0 on f(y0) plus b_hat on the stages, order 3
    let vander = [[1.0; STAGES], c, [c[0] * c[0], c[1] * c[1], 1.0]];
    let b_hat = Lu::factor(vander).expect("distinct nodes").solve(&[1.0 - g, 0.5, 1.0 / 3.0]);
    let b = a[2];
    let mut e = [0.0; STAGES];
    for (j, ej) in e.iter_mut().enumerate() {
        *ej = (0..STAGES).map(|i| (b_hat[i] - b[i]) * a_inv[i][j]).sum();
    }
    Tableau { c, a, gamma0: g, e }
}

/// Newton-form coefficients of the collocation cubic about the step end,
/// from the stage increments `z` (relative to the step start).
fn collocation(z: &[Vector; STAGES]) -> [Vector; 3] {
    let mut d = [[0.0; DIM]; 3];
    for k in 0..DIM {
        let r1 = (z[1][k] - z[2][k]) / S1;
        let r2 = (z[0][k] - z[2][k]) / S2;
        let r3 = z[2][k];
        let d1 = (r2 - r1) / (S2 - S1);
        let r23 = (r3 - r2) / (-1.0 - S2);
        d[0][k] = r1;
        d[1][k] = d1;
        d[2][k] = (r23 - d1) / (-1.0 - S1);
    }
    d
}

fn eval_collocation(d: &[Vector; 3], s: f64, k: usize) -> f64 {
    s * (d[0][k] + (s - S1) * (d[1][k] + (s - S2) * d[2][k]))
}

pub(crate) struct Radau5 {
    f0: Vector,
    jac: Option<[[f64; DIM]; DIM]>,
    /// Collocation polynomial of the last accepted step and its length.
    prev: Option<(f64, [Vector; 3])>,
    pending: Option<[Vector; 3]>,
    faccon: f64,
    newton_iters: usize,
    h_acc: f64,
    err_acc: f64,
}

impl Radau5 {
    pub(crate) fn new() -> Self {
        Radau5 {
            f0: [0.0; DIM],
            jac: None,
            prev: None,
            pending: None,
            faccon: 1.0,
            newton_iters: 1,
            h_acc: 0.0,
            err_acc: 1e-2,
        }
    }

    fn quotient(&self, err: f64) -> f64 {
        let cfac = SAFETY * (1 + 2 * NEWTON_MAX) as f64;
        let fac = SAFETY.min(cfac / (self.newton_iters + 2 * NEWTON_MAX) as f64);
        (err.powf(0.25) / fac).clamp(QUOT_MIN, QUOT_MAX)
    }
}

fn retry_for(e: Error) -> Attempt {
    match e {
        Error::NonpositiveDistance { .. } | Error::Overflow { .. } => Attempt::Retry {
            factor: 0.5,
            cause: RetryCause::Positivity,
        },
        other => Attempt::Fail(other),
    }
}

impl Scheme for Radau5 {
    const BASIS: DenseBasis = DenseBasis::Collocation;

    fn start(&mut self, field: &mut Field<'_>, t: f64, y: &Vector) -> Result<()> {
        self.f0 = field.eval(t, y)?;
        Ok(())
    }

    fn attempt(&mut self, field: &mut Field<'_>, t: f64, y: &Vector, h: f64, first: bool, last_rejected: bool) -> Attempt {
        let tab = tableau();
        let jac = match self.jac {
            Some(j) => j,
            None => match field.jacobian(t, y) {
                Ok(j) => *self.jac.insert(j),
                Err(e) => return Attempt::Fail(e),
            },
        };
        const N: usize = STAGES * DIM;
        let mut m = [[0.0; N]; N];
        for i in 0..STAGES {
            for j in 0..STAGES {
                for r in 0..DIM {
                    for c in 0..DIM {
                        let ident = if i == j && r == c { 1.0 } else { 0.0 };
                        m[DIM * i + r][DIM * j + c] = ident - h * tab.a[i][j] * jac[r][c];
                    }
                }
            }
        }
        let Some(newton) = Lu::<N>::factor(m) else {
            return Attempt::Retry { factor: 0.5, cause: RetryCause::Newton };
        };

        let mut z = [[0.0; DIM]; STAGES];
        if let Some((h_old, d)) = &self.prev {
            for (i, zi) in z.iter_mut().enumerate() {
                let s = tab.c[i] * h / h_old;
                for (k, v) in zi.iter_mut().enumerate() {
                    *v = eval_collocation(d, s, k);
                }
            }
        }

        let mut scal = [0.0; DIM];
        for k in 0..DIM {
            scal[k] = field.abs_tol + field.rel_tol * y[k].abs();
        }
        let fnewt = (10.0 * f64::EPSILON / field.rel_tol).max(0.03f64.min(field.rel_tol.sqrt()));
        let mut faccon = self.faccon.max(f64::EPSILON).powf(0.8);
        let mut dyno_old = 0.0;
        let mut converged = false;
        for it in 0..NEWTON_MAX {
            let mut f = [[0.0; DIM]; STAGES];
            for i in 0..STAGES {
                let mut yi = *y;
                for k in 0..DIM {
                    yi[k] += z[i][k];
                }
                match field.eval(t + tab.c[i] * h, &yi) {
                    Ok(v) => f[i] = v,
                    Err(e) => return retry_for(e),
                }
            }
            let mut g = [0.0; N];
            for i in 0..STAGES {
                for k in 0..DIM {
                    let af: f64 = (0..STAGES).map(|j| tab.a[i][j] * f[j][k]).sum();
                    g[DIM * i + k] = h * af - z[i][k];
                }
            }
            let dz = newton.solve(&g);
            let mut dyno: f64 = 0.0;
            for i in 0..STAGES {
                for k in 0..DIM {
                    dyno = dyno.max((dz[DIM * i + k] / scal[k]).abs());
                }
            }
            if !dyno.is_finite() {
                return Attempt::Retry { factor: 0.5, cause: RetryCause::Newton };
            }
            if it > 0 {
                let theta = dyno / dyno_old;
                if theta >= 0.99 {
                    return Attempt::Retry { factor: 0.5, cause: RetryCause::Newton };
                }
                faccon = theta / (1.0 - theta);
                let remaining = (NEWTON_MAX - 1 - it) as i32;
                let predicted = faccon * dyno * theta.powi(remaining) / fnewt;
                if predicted >= 1.0 {
                    let q = predicted.clamp(1e-4, 20.0);
                    let factor = 0.8 * q.powf(-1.0 / (4.0 + remaining as f64));
                    return Attempt::Retry { factor, cause: RetryCause::Newton };
                }
            }
            for i in 0..STAGES {
                for k in 0..DIM {
                    z[i][k] += dz[DIM * i + k];
                }
            }
            dyno_old = dyno.max(f64::EPSILON);
            if faccon * dyno <= fnewt {
                self.newton_iters = it + 1;
                converged = true;
                break;
            }
        }
        if !converged {
            return Attempt::Retry { factor: 0.5, cause: RetryCause::Newton };
        }
        self.faccon = faccon;
        if z.iter().any(|zi| !(y[0] + zi[0] > 0.0)) {
            return Attempt::Retry { factor: 0.5, cause: RetryCause::Positivity };
        }

        let mut y_new = *y;
        for k in 0..DIM {
            y_new[k] += z[2][k];
        }

        let mut filter = [[0.0; DIM]; DIM];
        for r in 0..DIM {
            for c in 0..DIM {
                filter[r][c] = if r == c { 1.0 } else { 0.0 } - h * tab.gamma0 * jac[r][c];
            }
        }
        let Some(filter) = Lu::<DIM>::factor(filter) else {
            return Attempt::Retry { factor: 0.5, cause: RetryCause::Newton };
        };
        let ez = |k: usize| -> f64 { (0..STAGES).map(|j| tab.e[j] * z[j][k]).sum() };
        let mut v = [0.0; DIM];
        for k in 0..DIM {
            v[k] = tab.gamma0 * h * self.f0[k] + ez(k);
        }
        let mut est = filter.solve(&v);
        let mut err = field.error_norm(&est, y, &y_new);
        if err >= 1.0 && (first || last_rejected) {
            let mut probe = *y;
            for k in 0..DIM {
                probe[k] += est[k];
            }
            if let Ok(f1) = field.eval(t, &probe) {
                for k in 0..DIM {
                    v[k] = tab.gamma0 * h * f1[k] + ez(k);
                }
                est = filter.solve(&v);
                err = field.error_norm(&est, y, &y_new);
            }
        }

        let d = collocation(&z);
        let mut dense: DenseCoeffs = [[0.0; DENSE_DIM]; 3];
        for (row, full) in dense.iter_mut().zip(&d) {
            row.copy_from_slice(&full[..DENSE_DIM]);
        }
        self.pending = Some(d);
        Attempt::Step { y_new, err, dense }
    }

    fn accept(&mut self, field: &mut Field<'_>, t: f64, y: &Vector, err: f64, h: f64, first: bool, last_rejected: bool) -> Result<f64> {
        let mut quot = self.quotient(err);
        if !first {
            let gus = (self.h_acc / h) * (err * err / self.err_acc).powf(0.25) / SAFETY;
            quot = quot.max(gus.clamp(QUOT_MIN, QUOT_MAX));
        }
        self.h_acc = h;
        self.err_acc = err.max(1e-2);
        let mut next = h / quot;
        if last_rejected {
            next = next.min(h);
        }
        self.prev = self.pending.take().map(|d| (h, d));
        self.jac = None;
        self.f0 = field.eval(t, y)?;
        Ok(next)
    }

    fn reject(&mut self, err: f64, h: f64, first: bool) -> f64 {
        self.pending = None;
        if first {
            0.1 * h
        } else {
            h / self.quotient(err)
        }
    }
}
