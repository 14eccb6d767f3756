//! Adaptive Gauss–Kronrod quadrature (10-point Gauss, 21-point Kronrod) with
//! global bisection of the interval carrying the largest error estimate.
//!
//! The rule never evaluates the integrand at the interval endpoints, so
//! integrable endpoint singularities are tolerated, although they converge
//! slowly. Callers with singular ends should substitute first.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl QuadSettings {
    pub fn relative(rel_tol: f64) -> Self {
        QuadSettings {
            rel_tol,
            abs_tol: 0.0,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for (j, (&x, &w)) in XGK[..10].iter().zip(&WGK[..10]).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    (value, error)
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, settings: QuadSettings) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let (value, error) = kronrod21(&f, a, b);
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_error = error;

    loop {
        let target = settings.abs_tol.max(settings.rel_tol * total.abs());
        if !total.is_finite() || !total_error.is_finite() {
            return Err(Error::QuadratureFailure {
                tol: settings.rel_tol,
                estimate: total_error,
            });
        }
        if total_error <= target {
            break;
        }
        if heap.len() >= settings.max_intervals {
            return Err(Error::QuadratureFailure {
                tol: settings.rel_tol,
                estimate: total_error,
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine precision
            return Err(Error::QuadratureFailure {
                tol: settings.rel_tol,
                estimate: total_error,
            });
        }
        let (lv, le) = kronrod21(&f, worst.a, mid);
        let (rv, re) = kronrod21(&f, mid, worst.b);
        evaluations += 42;
        total += lv + rv - worst.value;
        total_error += le + re - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Segment { a: mid, b: worst.b, value: rv, error: re });
    }

    // re-sum to shed the drift of the running updates
    let (value, error_estimate) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    Ok(Quadrature {
        value,
        error_estimate,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, QuadSettings::relative(1e-12)).unwrap();
        assert_relative_eq!(q.value, 64.0 / 6.0 - 4.0, max_relative = 1e-14);
        assert_eq!(q.evaluations, 21);
    }

    #[test]
    fn endpoint_singularity_converges() {
        // ∫_0^1 x^{-1/2} dx = 2
        let q = integrate(|x| x.sqrt().recip(), 0.0, 1.0, QuadSettings::relative(1e-9)).unwrap();
        assert_relative_eq!(q.value, 2.0, max_relative = 1e-8);
    }

    #[test]
    fn oscillatory_integrand() {
        // a zero integral needs an absolute target
        let settings = QuadSettings { abs_tol: 1e-13, ..QuadSettings::relative(1e-12) };
        let q = integrate(|x| (10.0 * x).sin(), 0.0, std::f64::consts::PI, settings).unwrap();
        assert!(q.value.abs() < 1e-12);
        let q = integrate(|x| (10.0 * x).cos().powi(2), 0.0, 1.0, QuadSettings::relative(1e-12)).unwrap();
        assert_relative_eq!(q.value, 0.5 + (20.0f64).sin() / 40.0, max_relative = 1e-12);
    }

    #[test]
    fn empty_interval() {
        let q = integrate(|x| x, 1.0, 1.0, QuadSettings::relative(1e-8)).unwrap();
        assert_eq!(q.value, 0.0);
    }

    #[test]
    fn nonintegrable_reports_failure() {
        let err = integrate(|x| 1.0 / x, 0.0, 1.0, QuadSettings::relative(1e-10)).unwrap_err();
        assert!(matches!(err, Error::QuadratureFailure { .. }));
    }
}
