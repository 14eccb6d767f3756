//! Property tests over randomized inputs.

use fsi_rebound::acceptance::{canonical_shell, canonical_spring};
use fsi_rebound::drag::{lubrication_shape_factor, BodyGeometry, DragLaw};
use fsi_rebound::experiments::{turning_points, LimitProfiles, SweepConfig};
use fsi_rebound::integrator::{energy_residual, integrate, IntegratorSettings};
use fsi_rebound::io::{fmt_f64, parse_csv};
use fsi_rebound::model::{spring_energy, Mode, ModelConfig, State};
use proptest::prelude::*;

fn any_law() -> impl Strategy<Value = DragLaw> {
    prop_oneof![
        (0.01f64..1.0, 0.0f64..30.0, 0.0f64..10.0, 0.1f64..10.0)
            .prop_map(|(c1, c2, c3, shell_mass)| DragLaw::PowerLawCoupled { c1, c2, c3, shell_mass }),
        (0.1f64..30.0).prop_map(|c| DragLaw::PrototypeD1 { c }),
        Just(DragLaw::PrototypeD2),
        (0.01f64..10.0, 1.0f64..3.0).prop_map(|(coefficient, alpha)| DragLaw::RigidPower { coefficient, alpha }),
        (0.05f64..1.0, 2u8..=3).prop_map(|(radius, dim)| DragLaw::AnalyticBall { radius, dim }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn drag_positive_in_operating_box(law in any_law(), h in 1e-6f64..1.3, xi in -1.0f64..1.0) {
        let d = law.evaluate(h, xi).unwrap();
        prop_assert!(d > 0.0 && d.is_finite());
    }

    #[test]
    fn rigid_shell_law_splits_into_power_and_constant(c1 in 0.01f64..1.0, c3 in 0.0f64..10.0, m in 0.1f64..10.0,
                                                      h in 1e-6f64..1.3, xi in -1.0f64..1.0) {
        let coupled = DragLaw::PowerLawCoupled { c1, c2: 0.0, c3, shell_mass: m }.evaluate(h, xi).unwrap();
        let power = DragLaw::RigidPower { coefficient: c1 / m, alpha: 1.5 }.evaluate(h, xi).unwrap();
        prop_assert!((coupled - (power + c3 / m)).abs() <= 1e-12 * coupled);
    }

    #[test]
    fn decimal_format_round_trips_bitwise(bits in any::<u64>()) {
        let v = f64::from_bits(bits);
        prop_assume!(v.is_finite());
        let text = format!("x\n{}\n", fmt_f64(v));
        let back = parse_csv(&text, "x").unwrap()[0][0];
        prop_assert_eq!(back.to_bits(), v.to_bits());
    }

    #[test]
    fn hit_and_stick_profile_is_continuous_and_non_increasing(h0 in 0.01f64..2.0, v in 0.01f64..3.0,
                                                               t in 0.0f64..10.0, dt in 0.0f64..1.0) {
        let lp = LimitProfiles::new(&canonical_spring(), h0, -v).unwrap();
        prop_assert!(lp.h_limit(t + dt) <= lp.h_limit(t));
        prop_assert!(lp.h_limit(lp.t0).abs() <= 1e-12 * h0);
        prop_assert!(lp.xi_limit(lp.t0) == 0.0);
        prop_assert!((lp.xi_dot_limit(lp.t0 + 1e-13) - v).abs() <= 1e-6 * v);
    }

    #[test]
    fn turning_points_store_all_kinetic_energy(v in 0.01f64..3.0, k in 10.0f64..1e5) {
        let p = fsi_rebound::model::SpringParams::new(1.0, 8.2, k).unwrap();
        let tp = turning_points(&p, -v).unwrap();
        let a = p.mass_ratio();
        for y in [tp.y_minus, tp.y_plus] {
            prop_assert!((2.0 * a * spring_energy(y, &p) - v * v).abs() <= 1e-12 * v * v);
        }
        prop_assert!(tp.y_minus < 0.0 && tp.y_plus > 0.0);
        prop_assert!(tp.t_minus > 0.0 && tp.t_plus.is_finite());
    }

    #[test]
    fn sweep_validation_matches_ordering(mus in prop::collection::vec(-0.1f64..1.0, 0..6)) {
        let ok = mus.len() >= 2 && mus.iter().all(|&m| m > 0.0) && mus.windows(2).all(|w| w[1] < w[0]);
        let cfg = SweepConfig::new(canonical_shell(20.0), mus);
        prop_assert_eq!(cfg.validate().is_ok(), ok);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lubrication_drag_decreases_with_distance(alpha in 0.4f64..2.5, gamma in 0.5f64..5.0, dim in 2u8..=3,
                                                h in 1e-5f64..0.5, ratio in 1.01f64..10.0) {
        let geom = BodyGeometry::new(alpha, gamma, dim).unwrap();
        let near = lubrication_shape_factor(&geom, h, 1e-8).unwrap();
        let far = lubrication_shape_factor(&geom, h * ratio, 1e-8).unwrap();
        prop_assert!(near > far && far > 0.0);
    }

    #[test]
    fn coupled_runs_stay_positive_and_conserve_energy(mu in 1e-3f64..0.2, c2 in 0.0f64..25.0,
                                                     h0 in 0.05f64..0.5, v in 0.1f64..1.0) {
        let mut cfg = canonical_shell(c2).with_mu(mu);
        cfg.initial.h = h0;
        cfg.initial.h_dot = -v;
        let traj = integrate(&cfg, 1.0, &IntegratorSettings::default()).unwrap();
        prop_assert!(traj.is_complete());
        let mut prev: Option<(f64, f64)> = None;
        for s in traj.samples() {
            prop_assert!(s.state.h > 0.0);
            if let Some((t, ledger)) = prev {
                prop_assert!(s.state.t > t);
                prop_assert!(s.ledger >= ledger);
            }
            prev = Some((s.state.t, s.ledger));
        }
        prop_assert!(energy_residual(&traj).relative() <= 1e-6);
    }

    #[test]
    fn rigid_body_never_rebounds(mu in 1e-3f64..0.2, coefficient in 0.01f64..2.0, alpha in 1.0f64..2.5,
                                 v in 0.1f64..1.0) {
        let cfg = ModelConfig {
            drag: DragLaw::RigidPower { coefficient, alpha },
            mode: Mode::RigidBody,
            initial: State { h_dot: -v, ..canonical_shell(0.0).initial },
            ..canonical_shell(0.0).with_mu(mu)
        };
        let settings = IntegratorSettings::default();
        let traj = integrate(&cfg, 2.0, &settings).unwrap();
        let states = traj.resample(0.0, 2.0, 2001);
        for w in states.windows(2) {
            prop_assert!(w[1].h <= w[0].h + 10.0 * settings.abs_tol);
        }
    }

    #[test]
    fn integration_is_deterministic(mu in 1e-3f64..0.2, c2 in 0.0f64..25.0) {
        let cfg = canonical_shell(c2).with_mu(mu);
        let a = integrate(&cfg, 0.8, &IntegratorSettings::default()).unwrap();
        let b = integrate(&cfg, 0.8, &IntegratorSettings::default()).unwrap();
        prop_assert_eq!(a.times(), b.times());
        prop_assert_eq!(a.interpolate(0.7), b.interpolate(0.7));
    }
}
