use stark_packet::config::parse_config;
use stark_packet::scenario::run_scenario;
use stark_packet::sweep::run_sweep;

#[test]
fn single_cell_equals_scenario() {
    let base = parse_config("grid.t_max = 5").unwrap();
    let rows = run_sweep(&base, &[3.0], &[0.9], None).unwrap();
    let mut cfg = base.clone();
    cfg.packet.delta = 3.0;
    cfg.packet.linewidth = 0.9;
    assert_eq!(rows.len(), 1);
    assert_eq!(
        rows[0].outcome.as_ref().unwrap(),
        &run_scenario(&cfg).unwrap().summary
    );
}

#[test]
fn opposite_detunings_give_opposite_shifts() {
    let base = parse_config("").unwrap();
    let rows = run_sweep(&base, &[-3.0, 3.0], &[0.9], Some(2)).unwrap();
    let (minus, plus) = (
        rows[0].outcome.as_ref().unwrap(),
        rows[1].outcome.as_ref().unwrap(),
    );
    assert_eq!(minus.max_abs_shift, plus.max_abs_shift);
    assert_eq!(minus.peak_shift, -plus.peak_shift);
    assert!(plus.peak_shift > 0.0);
    assert_eq!(minus.reflectance, plus.reflectance);
}

#[test]
fn rows_follow_grid_order() {
    let base = parse_config("grid.t_max = 1").unwrap();
    let rows = run_sweep(&base, &[1.0, 2.0], &[0.5, 1.5, 2.5], Some(3)).unwrap();
    let order: Vec<(f64, f64)> = rows.iter().map(|r| (r.delta, r.linewidth)).collect();
    assert_eq!(
        order,
        [
            (1.0, 0.5),
            (1.0, 1.5),
            (1.0, 2.5),
            (2.0, 0.5),
            (2.0, 1.5),
            (2.0, 2.5)
        ]
    );
}
