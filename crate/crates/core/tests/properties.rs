//! Randomized invariants.

use num_complex::Complex64;
use proptest::prelude::*;

use stark_packet::config::{emit_config, parse_config, PacketKind, ScenarioConfig};
use stark_packet::dynamics::{evolve_psi_ode, AmplitudeSeries};
use stark_packet::generator::{
    decay_rate_closed_form, stark_shift_closed_form, stark_shift_numeric, EPS_PSI,
};
use stark_packet::model::{InitialCondition, PacketSpec, PhysicalParams, TimeGrid};

fn evolve(p: &PhysicalParams, packet: &PacketSpec, dt: f64, t_max: f64) -> AmplitudeSeries {
    let grid = TimeGrid::from_horizon(dt, t_max).unwrap();
    evolve_psi_ode(p, packet, &grid, &InitialCondition::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shift_is_odd_and_rate_even(d in 0.05f64..5.0, w in 0.05f64..5.0, t in 0.0f64..20.0) {
        let s = stark_shift_closed_form(d, w, 1.0, t).unwrap();
        prop_assert_eq!(stark_shift_closed_form(-d, w, 1.0, t).unwrap(), -s);
        let r = decay_rate_closed_form(d, w, 1.0, t).unwrap();
        prop_assert!((decay_rate_closed_form(-d, w, 1.0, t).unwrap() - r).abs() <= 1e-12 * r.abs().max(1.0));
    }

    #[test]
    fn extracted_shift_is_odd(d in 0.05f64..5.0, w in 0.05f64..5.0) {
        let p = PhysicalParams::default();
        let shift = |d: f64| {
            let packet = PacketSpec::exponential(d, w, &p).unwrap();
            stark_shift_numeric(&evolve(&p, &packet, 1e-3, 3.0), EPS_PSI)
        };
        let (a, b) = (shift(d), shift(-d));
        prop_assert_eq!(&a.valid, &b.valid);
        for k in 0..a.shift.len() {
            if a.valid[k] {
                prop_assert!((a.shift[k] + b.shift[k]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn amplitude_is_linear_in_the_packet(d in -5.0f64..5.0, w in 0.05f64..5.0, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let p = PhysicalParams::default();
        let lambda = Complex64::new(re, im);
        let packet = PacketSpec::exponential(d, w, &p).unwrap();
        let base = evolve(&p, &packet, 1e-3, 2.0);
        let scaled = evolve(&p, &packet.clone().scaled(lambda), 1e-3, 2.0);
        let peak = base.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        for (a, b) in base.values.iter().zip(&scaled.values) {
            prop_assert!((a * lambda - b).norm() <= 1e-12 * peak * lambda.norm().max(1.0));
        }
    }

    #[test]
    fn gamma_rescaling_is_exact(d in -4.0f64..4.0, w in 0.1f64..4.0) {
        let unit = PhysicalParams::default();
        let doubled = PhysicalParams::new(2.0, 1e6, unit.rho_1d(), 1.0).unwrap();
        let a = evolve(&unit, &PacketSpec::exponential(d, w, &unit).unwrap(), 1e-3, 3.0);
        let b = evolve(&doubled, &PacketSpec::exponential(2.0 * d, 2.0 * w, &doubled).unwrap(), 5e-4, 1.5);
        let peak = a.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).norm() <= 1e-12 * peak);
        }
        // shift / gamma and rate / gamma come from finite differences, which
        // turn rounding in psi into errors of order eps / (dt |psi|)
        let (ga, gb) = (stark_shift_numeric(&a, EPS_PSI), stark_shift_numeric(&b, EPS_PSI));
        prop_assert_eq!(&ga.valid, &gb.valid);
        for k in 0..ga.shift.len() {
            if ga.valid[k] {
                let floor = 64.0 * f64::EPSILON / (1e-3 * a.values[k].norm());
                prop_assert!((ga.shift[k] - gb.shift[k] / 2.0).abs() <= floor.max(1e-12));
                prop_assert!((ga.rate[k] - gb.rate[k] / 2.0).abs() <= floor.max(1e-12 * ga.rate[k].abs()));
            }
        }
    }

    #[test]
    fn omega0_does_not_enter(d in -5.0f64..5.0, w in 0.1f64..5.0, omega0 in 1.0f64..1e9) {
        let a = PhysicalParams::default();
        let b = PhysicalParams::natural(omega0).unwrap();
        let pa = PacketSpec::exponential(d, w, &a).unwrap();
        let pb = PacketSpec::exponential(d, w, &b).unwrap();
        prop_assert_eq!(evolve(&a, &pa, 1e-3, 1.0).values, evolve(&b, &pb, 1e-3, 1.0).values);
    }

    #[test]
    fn config_round_trips(
        gamma in 0.1f64..10.0,
        rho in 0.01f64..1.0,
        d in -10.0f64..10.0,
        w in 1e-3f64..10.0,
        dt in 1e-5f64..1e-2,
        c0 in 0.0f64..0.7,
        tabulated in any::<bool>(),
        absolute in any::<bool>(),
    ) {
        let mut cfg = ScenarioConfig::default();
        cfg.params.gamma_1d = gamma;
        cfg.params.rho_1d = rho;
        cfg.packet.delta = d;
        cfg.packet.linewidth = w;
        cfg.grid.dt = dt;
        cfg.initial.c0 = Complex64::new(c0, -0.5 * c0);
        cfg.output.absolute = absolute;
        if tabulated {
            cfg.packet.kind = PacketKind::Tabulated;
            cfg.packet.file = Some("packets/in.csv".into());
        }
        prop_assert_eq!(parse_config(&emit_config(&cfg)).unwrap(), cfg);
    }
}
