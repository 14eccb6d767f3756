//! Lubrication drag against a Beta-function closed form.
//!
//! With `p = 1 + alpha`, scaling `r = (h/gamma)^(1/p) v` gives
//! `∫ r^(s-1) / (h + gamma r^p)^3 dr = h^(s/p - 3) gamma^(-s/p) B(s/p, 3 - s/p) / p`,
//! where `s = 3, prefactor 24` for N = 2 and `s = 4, prefactor 6 pi` for N = 3.

use fsi_rebound::drag::{fit_loglog_slope, lubrication_direct, lubrication_shape_factor, BodyGeometry};
use fsi_rebound::io::log_grid;
use proptest::prelude::*;
use statrs::function::beta::beta;
use std::f64::consts::PI;

fn oracle(alpha: f64, gamma: f64, dim: u8, h: f64) -> f64 {
    let p = 1.0 + alpha;
    let (s, prefactor) = if dim == 2 { (3.0, 24.0) } else { (4.0, 6.0 * PI) };
    let x = s / p;
    prefactor * h.powf(x - 3.0) * gamma.powf(-x) * beta(x, 3.0 - x) / p
}

#[test]
fn ball_values_from_oracle() {
    // gamma = 1 / (2R), R = 0.2
    assert!((oracle(1.0, 2.5, 3, 0.1) - 6.0 * PI * 0.04 / 0.1).abs() < 1e-10);
    assert!((oracle(1.0, 2.5, 2, 0.1) - 3.0 * 2f64.sqrt() * PI * 2f64.powf(1.5)).abs() < 1e-9);
}

#[test]
fn exponents_from_direct_integral() {
    for dim in [2u8, 3] {
        for alpha in [0.5, 1.0, 2.0] {
            let geom = BodyGeometry::new(alpha, 2.5, dim).unwrap();
            let pts: Vec<(f64, f64)> =
                log_grid(1e-6, 1e-4, 5).into_iter().map(|h| (h, lubrication_direct(&geom, h, 1e-9).unwrap())).collect();
            let expected = if dim == 2 { -3.0 * alpha / (1.0 + alpha) } else { (1.0 - 3.0 * alpha) / (1.0 + alpha) };
            let slope = fit_loglog_slope(&pts).unwrap();
            assert!((slope - expected).abs() <= 0.02, "N={dim} alpha={alpha}: {slope}");
            for (h, d) in pts {
                let want = oracle(alpha, 2.5, dim, h);
                assert!((d - want).abs() <= 1e-7 * want, "N={dim} alpha={alpha} h={h}: {d} vs {want}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shape_factor_matches_beta_oracle(alpha in 0.35f64..3.0, gamma in 0.2f64..10.0, dim in 2u8..=3, log_h in -8.0f64..0.0) {
        prop_assume!(dim == 2 || alpha > 0.4);
        let h = 10f64.powf(log_h);
        let geom = BodyGeometry::new(alpha, gamma, dim).unwrap();
        let got = lubrication_shape_factor(&geom, h, 1e-10).unwrap();
        let want = oracle(alpha, gamma, dim, h);
        prop_assert!((got - want).abs() <= 1e-8 * want, "{} vs {}", got, want);
    }
}
