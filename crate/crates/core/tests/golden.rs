//! Undriven emitter: golden CSV plus the analytic decay it must follow.

use std::path::Path;

use stark_packet::config::load_config;
use stark_packet::scenario::{csv_string, run_scenario};

fn golden_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden"))
}

#[test]
fn undriven_decay_matches_golden_file() {
    let cfg = load_config(&golden_dir().join("undriven.cfg")).unwrap();
    let result = run_scenario(&cfg).unwrap();
    let expected = std::fs::read_to_string(golden_dir().join("undriven_series.csv")).unwrap();
    assert_eq!(csv_string(&result, false), expected);
}

#[test]
fn undriven_decay_is_exponential() {
    let cfg = load_config(&golden_dir().join("undriven.cfg")).unwrap();
    let r = run_scenario(&cfg).unwrap();
    for k in 0..r.psi.len() {
        let t = r.grid().t(k);
        let exact = (-0.5 * t).exp();
        assert!((r.psi.values[k].re - exact).abs() < 1e-10, "t={t}");
        assert_eq!(r.psi.values[k].im, 0.0);
        assert_eq!(r.shift[k], 0.0);
        assert!((r.generator.rate[k] - 1.0).abs() < 1e-8);
        // no input: both channels carry half the emission
        assert_eq!(r.intensities.i0[k], 0.0);
        assert!((r.intensities.ib[k] - 0.5 * exact * exact).abs() < 1e-10);
        assert_eq!(r.intensities.ia[k], r.intensities.ib[k]);
    }
    assert!(r.summary.population_error.unwrap() < 1e-9);
}
