//! Explicit Dormand–Prince 5(4) pair with FSAL, the DOPRI5 continuous
//! extension and a PI step-size controller.

use super::{Attempt, DenseBasis, DenseCoeffs, Field, RetryCause, Scheme, Vector, DENSE_DIM, DIM};
use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

pub(crate) struct DormandPrince {
    k1: Vector,
    k7: Vector,
    fac_old: f64,
}

impl DormandPrince {
    pub(crate) fn new() -> Self {
        DormandPrince {
            k1: [0.0; DIM],
            k7: [0.0; DIM],
            fac_old: 1e-4,
        }
    }
}

fn combine(y: &Vector, h: f64, terms: &[(f64, &Vector)]) -> Vector {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

impl Scheme for DormandPrince {
    const BASIS: DenseBasis = DenseBasis::RungeKutta;

    fn start(&mut self, field: &mut Field<'_>, t: f64, y: &Vector) -> Result<()> {
        self.k1 = field.eval(t, y)?;
        Ok(())
    }

    fn attempt(&mut self, field: &mut Field<'_>, t: f64, y: &Vector, h: f64, _first: bool, _last_rejected: bool) -> Attempt {
        let k1 = self.k1;
        let mut stages = || -> Result<(Vector, [Vector; 7], [Vector; 5])> {
            let y2 = combine(y, h, &[(A21, &k1)]);
            let k2 = field.eval(t + C2 * h, &y2)?;
            let y3 = combine(y, h, &[(A31, &k1), (A32, &k2)]);
            let k3 = field.eval(t + C3 * h, &y3)?;
            let y4 = combine(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            let k4 = field.eval(t + C4 * h, &y4)?;
            let y5 = combine(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
            let k5 = field.eval(t + C5 * h, &y5)?;
            let y6 = combine(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
            let k6 = field.eval(t + h, &y6)?;
            let y_new = combine(y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = field.eval(t + h, &y_new)?;
            Ok((y_new, [k1, k2, k3, k4, k5, k6, k7], [y2, y3, y4, y5, y6]))
        };
        let (y_new, k, states) = match stages() {
            Ok(v) => v,
            Err(Error::NonpositiveDistance { .. }) | Err(Error::Overflow { .. }) => {
                return Attempt::Retry { factor: 0.5, cause: RetryCause::Positivity }
            }
            Err(e) => return Attempt::Fail(e),
        };
        if states.iter().any(|s| !(s[0] > 0.0)) {
            return Attempt::Retry { factor: 0.5, cause: RetryCause::Positivity };
        }
        let mut e = [0.0; DIM];
        for (i, ei) in e.iter_mut().enumerate() {
            *ei = h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
        }
        let err = field.error_norm(&e, y, &y_new);
        self.k7 = k[6];
        Attempt::Step { y_new, err, dense: dense_coefficients(y, &y_new, &k, h) }
    }

    fn accept(&mut self, _field: &mut Field<'_>, _t: f64, _y: &Vector, err: f64, h: f64, _first: bool, last_rejected: bool) -> Result<f64> {
        let fac = (err.powf(EXPO1) / self.fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let mut next = h / fac;
        if last_rejected {
            next = next.min(h);
        }
        self.fac_old = err.max(1e-4);
        self.k1 = self.k7;
        Ok(next)
    }

    fn reject(&mut self, err: f64, h: f64, _first: bool) -> f64 {
        h / (err.powf(EXPO1) / SAFETY).min(1.0 / FAC_MIN)
    }
}

fn dense_coefficients(y: &Vector, y_new: &Vector, k: &[Vector; 7], h: f64) -> DenseCoeffs {
    let mut r3 = [0.0; DENSE_DIM];
    let mut r4 = [0.0; DENSE_DIM];
    let mut r5 = [0.0; DENSE_DIM];
    for i in 0..DENSE_DIM {
        let delta = y_new[i] - y[i];
        r3[i] = h * k[0][i] - delta;
        r4[i] = delta - h * k[6][i] - r3[i];
        r5[i] = h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
    }
    [r3, r4, r5]
}
