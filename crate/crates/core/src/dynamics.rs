//! Exact excited-state amplitude and the outgoing guided fields.
//!
//! The emitter amplitude obeys the driven linear equation
//! `d psi~/dt = -(gamma_1d/2) psi~ - g [phi~_a(-c t, 0) + phi~_b(c t, 0)]`,
//! which is the differential form of the retarded-drive solution. The field
//! anywhere in the guide is the freely propagated input plus `sqrt(beta)`
//! times `psi~` at the retarded time.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    integrate_piecewise, InitialCondition, NormAudit, PacketSpec, PhysicalParams, Side,
    SpatialGrid, TimeGrid,
};
use crate::numeric::exprel;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Reference frame of stored amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Frame {
    /// Rotating at `omega0`.
    Rotating,
}

/// `psi~(t_k)` sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSeries {
    pub grid: TimeGrid,
    pub values: Vec<Complex64>,
    pub frame: Frame,
}

impl AmplitudeSeries {
    pub fn new(grid: TimeGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_steps() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid,
            values,
            frame: Frame::Rotating,
        })
    }

    /// Evaluates a closure on every grid time.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> Result<Complex64>) -> Result<Self> {
        let values = grid.times().map(f).collect::<Result<Vec<_>>>()?;
        Self::new(grid, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Linear interpolation in time; zero for `t < 0`.
    pub fn at(&self, t: f64) -> Result<Complex64> {
        if t < 0.0 {
            return Ok(ZERO);
        }
        let horizon = self.grid.t_max();
        let dt = self.grid.dt();
        if t > horizon * (1.0 + 1e-12) {
            return Err(Error::OutOfHorizon {
                retarded: t,
                horizon,
            });
        }
        if let Some(k) = self.grid.index_of(t) {
            return Ok(self.values[k]);
        }
        let k = ((t / dt).floor() as usize).min(self.len() - 2);
        let s = (t - self.grid.t(k)) / dt;
        Ok(self.values[k] * (1.0 - s) + self.values[k + 1] * s)
    }

    /// Index of a grid time, or an off-grid error.
    pub fn index(&self, t: f64) -> Result<usize> {
        self.grid.index_of(t).ok_or(Error::OffGrid {
            t,
            dt: self.grid.dt(),
        })
    }
}

/// Closed-form `psi~(t)` for the exponential packet with `psi(0) = 0`.
pub fn psi_closed_form(
    params: &PhysicalParams,
    delta: f64,
    linewidth: f64,
    t: f64,
) -> Result<Complex64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::domain("t", format!("must be >= 0, got {t}")));
    }
    if linewidth.is_nan() || linewidth <= 0.0 {
        return Err(Error::domain(
            "linewidth",
            format!("must be > 0, got {linewidth}"),
        ));
    }
    let gamma = params.gamma_1d();
    let amp = -(0.5 * gamma * linewidth).sqrt();
    let kappa = Complex64::new(0.5 * (gamma - linewidth), -delta);
    if kappa.norm() < 1e-12 * gamma {
        return Ok(Complex64::new(amp * t * (-0.5 * gamma * t).exp(), 0.0));
    }
    let kt = kappa * t;
    if kt.re > 1.0 {
        // exp(kappa t) would dominate; use the difference of decaying exponentials.
        let packet = (Complex64::new(-0.5 * linewidth, -delta) * t).exp();
        Ok(amp * (packet - (-0.5 * gamma * t).exp()) / kappa)
    } else {
        Ok(amp * t * (-0.5 * gamma * t).exp() * exprel(kt))
    }
}

/// Largest step accepted by [`evolve_psi_ode`] for this packet.
pub fn max_step(params: &PhysicalParams, packet: &PacketSpec) -> f64 {
    let mut fastest = params.gamma_1d();
    if let Some(w) = packet.linewidth() {
        fastest = fastest.max(w);
    }
    if let Some(d) = packet.delta() {
        fastest = fastest.max(d.abs());
    }
    0.01 / fastest
}

/// Classical RK4 trace of `psi~` driven by the packet at retarded positions.
pub fn evolve_psi_ode(
    params: &PhysicalParams,
    packet: &PacketSpec,
    grid: &TimeGrid,
    init: &InitialCondition,
) -> Result<AmplitudeSeries> {
    let limit = max_step(params, packet);
    let dt = grid.dt();
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge {
            dt,
            suggested: limit,
        });
    }
    AmplitudeSeries::new(*grid, rk4_trace(params, packet, grid, init))
}

/// The RK4 loop without the step-size guard.
fn rk4_trace(
    params: &PhysicalParams,
    packet: &PacketSpec,
    grid: &TimeGrid,
    init: &InitialCondition,
) -> Vec<Complex64> {
    let dt = grid.dt();
    let half_gamma = 0.5 * params.gamma_1d();
    let g = params.g();
    let c = params.c();
    let rhs = |t: f64, psi: Complex64| -half_gamma * psi - g * packet.drive_at(t, c);

    let mut values = Vec::with_capacity(grid.n_steps());
    let mut psi = init.psi0;
    values.push(psi);
    for k in 0..grid.n_steps() - 1 {
        let t = grid.t(k);
        let k1 = rhs(t, psi);
        let k2 = rhs(t + 0.5 * dt, psi + k1 * (0.5 * dt));
        let k3 = rhs(t + 0.5 * dt, psi + k2 * (0.5 * dt));
        let k4 = rhs(t + dt, psi + k3 * dt);
        psi += (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0);
        values.push(psi);
    }
    values
}

/// Right-moving field `phi~_a(x, t)`.
///
/// For `x <= 0` only the free input contributes (the value at `x = 0` is the
/// left limit); for `x > 0` the emitted wave arrives once `t >= x / c`.
pub fn field_forward(
    params: &PhysicalParams,
    packet: &PacketSpec,
    psi: &AmplitudeSeries,
    x: f64,
    t: f64,
) -> Result<Complex64> {
    let c = params.c();
    let free = packet.amplitude_at(x - c * t);
    if x <= 0.0 {
        return Ok(free);
    }
    let retarded = t - x / c;
    if retarded < 0.0 {
        return Ok(free);
    }
    Ok(free + params.beta().sqrt() * psi.at(retarded)?)
}

/// Emitted left-moving field `phi~_b(x, t) = sqrt(beta) psi~(t - |x|/c)`, `x <= 0`.
pub fn field_backward(
    params: &PhysicalParams,
    psi: &AmplitudeSeries,
    x: f64,
    t: f64,
) -> Result<Complex64> {
    if x > 0.0 {
        return Err(Error::domain("x", "the backward channel lives at x <= 0"));
    }
    let retarded = t - x.abs() / params.c();
    if retarded < 0.0 {
        return Ok(ZERO);
    }
    Ok(params.beta().sqrt() * psi.at(retarded)?)
}

/// Both field components on a set of positions at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub t: f64,
    pub positions: Vec<f64>,
    pub forward: Vec<Complex64>,
    pub backward: Vec<Complex64>,
}

pub fn field_snapshot(
    params: &PhysicalParams,
    packet: &PacketSpec,
    psi: &AmplitudeSeries,
    positions: &[f64],
    t: f64,
) -> Result<FieldSnapshot> {
    let c = params.c();
    let mut forward = Vec::with_capacity(positions.len());
    let mut backward = Vec::with_capacity(positions.len());
    for &x in positions {
        forward.push(field_forward(params, packet, psi, x, t)?);
        let free = packet.backward_amplitude_at(x + c * t);
        backward.push(if x <= 0.0 {
            free + field_backward(params, psi, x, t)?
        } else {
            free
        });
    }
    Ok(FieldSnapshot {
        t,
        positions: positions.to_vec(),
        forward,
        backward,
    })
}

/// Total single-excitation probability at grid time `t`:
/// `|psi|^2` plus the real-space norm of both field components.
///
/// Free-input regions are integrated on `spatial`, split at the packet's jump
/// points. The regions filled by emission, `|x| <= c t`, are integrated in
/// retarded time on the amplitude grid so no interpolation is needed.
pub fn excitation_norm(
    params: &PhysicalParams,
    packet: &PacketSpec,
    psi: &AmplitudeSeries,
    t: f64,
    spatial: &SpatialGrid,
) -> Result<NormAudit> {
    let k = psi.index(t)?;
    let c = params.c();
    let ct = c * t;
    let sqrt_beta = params.beta().sqrt();
    let step = spatial.step;

    let fwd = |y: f64, side: Option<Side>| match side {
        Some(s) => packet.amplitude_at_side(y, s).norm_sqr(),
        None => packet.amplitude_at(y).norm_sqr(),
    };
    let bwd = |y: f64, side: Option<Side>| match side {
        Some(s) => packet.backward_amplitude_at_side(y, s).norm_sqr(),
        None => packet.backward_amplitude_at(y).norm_sqr(),
    };
    let mut breaks = Vec::new();
    if let Some(e) = packet.forward() {
        breaks.extend(e.discontinuities());
    }
    if let Some(e) = packet.backward() {
        breaks.extend(e.discontinuities());
    }

    let mut field = 0.0;
    // forward, x < 0 and x > ct: free input at y = x - ct
    field += integrate_piecewise(spatial.start.min(0.0) - ct, -ct, step, &breaks, fwd);
    field += integrate_piecewise(0.0, spatial.end.max(ct) - ct, step, &breaks, fwd);
    // backward, x < -ct and x > 0: free input at y = x + ct
    field += integrate_piecewise(spatial.start.min(-ct) + ct, 0.0, step, &breaks, bwd);
    field += integrate_piecewise(ct, spatial.end.max(0.0) + ct, step, &breaks, bwd);

    // |x| < ct, retarded time tau = t - |x|/c on the grid
    if k > 0 {
        let h = psi.grid.dt();
        let density = |j: usize| {
            let tau = psi.grid.t(j);
            let emitted = sqrt_beta * psi.values[j];
            let (a, b) = if j == 0 {
                (
                    packet.amplitude_at_side(-c * tau, Side::Left),
                    packet.backward_amplitude_at_side(c * tau, Side::Right),
                )
            } else {
                (
                    packet.amplitude_at(-c * tau),
                    packet.backward_amplitude_at(c * tau),
                )
            };
            (a + emitted).norm_sqr() + (b + emitted).norm_sqr()
        };
        let interior: f64 = (1..k).map(density).sum();
        field += c * h * (0.5 * density(0) + interior + 0.5 * density(k));
    }

    let mut coarse = false;
    let mut incomplete = spatial.end < ct || spatial.start > -ct;
    if let Some(w) = packet.linewidth() {
        let length = c / w;
        coarse = step > 0.01 * length;
        incomplete |= spatial.start > -ct - 10.0 * length;
    }
    Ok(NormAudit {
        value: psi.values[k].norm_sqr() + field / params.photon_norm(),
        coarse,
        incomplete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn natural() -> PhysicalParams {
        PhysicalParams::default()
    }

    /// Retarded-drive convolution on a coarse grid; independent of the RK4 path.
    fn convolution_oracle(
        params: &PhysicalParams,
        packet: &PacketSpec,
        t: f64,
        n: usize,
    ) -> Complex64 {
        let h = t / n as f64;
        let g = params.g();
        let half = 0.5 * params.gamma_1d();
        let f = |s: f64| packet.drive_at(s, params.c()) * (-half * (t - s)).exp();
        // composite Simpson
        let mut acc = f(0.0) + f(t);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += f(i as f64 * h) * w;
        }
        -g * acc * (h / 3.0)
    }

    #[test]
    fn closed_form_vanishes_at_start() {
        let p = natural();
        assert_eq!(psi_closed_form(&p, 3.0, 0.9, 0.0).unwrap(), ZERO);
        assert!(psi_closed_form(&p, 3.0, 0.9, -1.0).is_err());
    }

    #[test]
    fn mode_matched_resonant_peak() {
        let p = natural();
        let pop = |t: f64| psi_closed_form(&p, 0.0, 1.0, t).unwrap().norm_sqr();
        for t in [0.3, 1.0, 2.0, 5.0] {
            assert!((pop(t) - 0.5 * t * t * (-t).exp()).abs() < 1e-15);
        }
        assert!((pop(2.0) - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert!(pop(1.99) < pop(2.0) && pop(2.01) < pop(2.0));
    }

    #[test]
    fn closed_form_is_continuous_across_branches() {
        let p = natural();
        // kappa t crosses Re = 1 for linewidth < gamma
        let a = psi_closed_form(&p, 0.3, 0.2, 2.4999999).unwrap();
        let b = psi_closed_form(&p, 0.3, 0.2, 2.5000001).unwrap();
        assert!((a - b).norm() < 1e-6);
        // near-removable point
        let c = psi_closed_form(&p, 1e-10, 1.0, 1.0).unwrap();
        let d = psi_closed_form(&p, 0.0, 1.0, 1.0).unwrap();
        assert!((c - d).norm() < 1e-9);
    }

    #[test]
    fn closed_form_agrees_with_convolution() {
        let p = natural();
        for &(d, w) in &[(3.0, 0.9), (0.0, 1.0), (-2.0, 4.0)] {
            let pk = PacketSpec::exponential(d, w, &p).unwrap();
            for t in [0.5, 2.0, 6.0] {
                let oracle = convolution_oracle(&p, &pk, t, 4000);
                let exact = psi_closed_form(&p, d, w, t).unwrap();
                assert!((oracle - exact).norm() < 1e-9, "{d} {w} {t}");
            }
        }
    }

    #[test]
    fn ode_matches_closed_form_at_unit_time() {
        let p = natural();
        let pk = PacketSpec::exponential(3.0, 0.9, &p).unwrap();
        let grid = TimeGrid::from_horizon(1e-4, 1.0).unwrap();
        let series = evolve_psi_ode(&p, &pk, &grid, &InitialCondition::default()).unwrap();
        let exact = psi_closed_form(&p, 3.0, 0.9, 1.0).unwrap();
        assert!((series.values[grid.n_steps() - 1] - exact).norm() < 1e-8);
        assert_eq!(series.values[0], ZERO);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]

        #[test]
        fn integrator_is_fourth_order(d in -3.0f64..3.0, w in 0.3f64..3.0) {
            // steps well above the guard so truncation dominates rounding
            let p = natural();
            let pk = PacketSpec::exponential(d, w, &p).unwrap();
            let error = |dt: f64| {
                let grid = TimeGrid::from_horizon(dt, 4.0).unwrap();
                rk4_trace(&p, &pk, &grid, &InitialCondition::default())
                    .iter()
                    .enumerate()
                    .map(|(k, v)| (v - psi_closed_form(&p, d, w, grid.t(k)).unwrap()).norm())
                    .fold(0.0f64, f64::max)
            };
            let (coarse, fine) = (error(0.1), error(0.05));
            proptest::prop_assert!(coarse / fine >= 0.9 * 8.0, "{} / {}", coarse, fine);
        }
    }

    #[test]
    fn free_decay() {
        let p = natural();
        let grid = TimeGrid::from_horizon(1e-3, 10.0).unwrap();
        let init = InitialCondition::new(Complex64::new(1.0, 0.0), ZERO);
        let s = evolve_psi_ode(&p, &PacketSpec::vacuum(&p), &grid, &init).unwrap();
        for (k, v) in s.values.iter().enumerate() {
            assert!((v.norm() - (-0.5 * grid.t(k)).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn delayed_packet_never_arrives() {
        let p = natural();
        let xs: Vec<f64> = (0..=100).map(|i| -30.0 + 0.1 * i as f64).collect();
        let amps = xs.iter().map(|_| Complex64::new(0.3, 0.1)).collect();
        let pk = PacketSpec::tabulated(xs, amps, 0.0, &p).unwrap();
        let grid = TimeGrid::from_horizon(1e-3, 10.0).unwrap();
        let s = evolve_psi_ode(&p, &pk, &grid, &InitialCondition::default()).unwrap();
        assert!(s.values.iter().all(|v| *v == ZERO));
    }

    #[test]
    fn refuses_coarse_steps() {
        let p = natural();
        let pk = PacketSpec::exponential(5.0, 0.1, &p).unwrap();
        let grid = TimeGrid::from_horizon(0.01, 10.0).unwrap();
        match evolve_psi_ode(&p, &pk, &grid, &InitialCondition::default()) {
            Err(Error::StepTooLarge { suggested, .. }) => {
                assert!((suggested - 0.002).abs() < 1e-15)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn backward_field_causality_and_weight() {
        let p = natural();
        let pk = PacketSpec::exponential(0.0, 1.0, &p).unwrap();
        let grid = TimeGrid::from_horizon(1e-3, 10.0).unwrap();
        let s = evolve_psi_ode(&p, &pk, &grid, &InitialCondition::default()).unwrap();
        assert_eq!(field_backward(&p, &s, -3.0, 2.0).unwrap(), ZERO);
        let at_atom = field_backward(&p, &s, 0.0, 4.0).unwrap();
        assert!((at_atom.norm_sqr() - 0.5 * s.values[4000].norm_sqr()).abs() < 1e-15);
        assert!(field_backward(&p, &s, 0.5, 1.0).is_err());
        assert!(matches!(
            field_backward(&p, &s, -1.0, 12.0),
            Err(Error::OutOfHorizon { .. })
        ));
    }

    #[test]
    fn forward_field_ahead_of_everything_is_zero() {
        let p = natural();
        let pk = PacketSpec::exponential(1.0, 2.0, &p).unwrap();
        let grid = TimeGrid::from_horizon(1e-3, 5.0).unwrap();
        let s = evolve_psi_ode(&p, &pk, &grid, &InitialCondition::default()).unwrap();
        assert_eq!(field_forward(&p, &pk, &s, 4.0, 3.0).unwrap(), ZERO);
        // x <= 0: free term only
        let x = -0.7;
        assert_eq!(
            field_forward(&p, &pk, &s, x, 2.0).unwrap(),
            pk.amplitude_at(x - 2.0)
        );
        assert!(matches!(
            field_forward(&p, &pk, &s, 1.0, 7.0),
            Err(Error::OutOfHorizon { .. })
        ));
    }

    #[test]
    fn far_detuned_photon_is_transmitted() {
        let p = natural();
        let d = 200.0;
        let pk = PacketSpec::exponential(d, 1.0, &p).unwrap();
        let grid = TimeGrid::from_horizon(0.01 / d, 3.0).unwrap();
        let s = evolve_psi_ode(&p, &pk, &grid, &InitialCondition::default()).unwrap();
        for t in [1.0, 2.0, 2.9] {
            let total = field_forward(&p, &pk, &s, 1e-9, t).unwrap().norm();
            let free = pk.amplitude_at(-t).norm();
            assert!((total / free - 1.0).abs() < 0.01, "{t}: {total} {free}");
        }
    }

    #[test]
    fn long_resonant_photon_is_reflected() {
        let p = natural();
        let w = 0.01;
        let pk = PacketSpec::exponential(0.0, w, &p).unwrap();
        let grid = TimeGrid::from_horizon(1e-2, 60.0).unwrap();
        let s = evolve_psi_ode(&p, &pk, &grid, &InitialCondition::default()).unwrap();
        let t = 60.0;
        let ia = field_forward(&p, &pk, &s, 1e-12, t).unwrap().norm_sqr();
        let i0 = pk.amplitude_at(-t).norm_sqr();
        assert!(ia / i0 <= 0.01, "{}", ia / i0);
    }

    #[test]
    fn excitation_norm_is_conserved() {
        let p = natural();
        let pk = PacketSpec::exponential(3.0, 0.9, &p).unwrap();
        let grid = TimeGrid::from_horizon(1e-3, 10.0).unwrap();
        let s = evolve_psi_ode(&p, &pk, &grid, &InitialCondition::default()).unwrap();
        for t in [0.0, 0.5, 3.0, 10.0] {
            let sg = SpatialGrid::new(-t - 10.0 / 0.9 - 20.0, t, 1e-3).unwrap();
            let audit = excitation_norm(&p, &pk, &s, t, &sg).unwrap();
            assert!((audit.value - 1.0).abs() < 1e-5, "{t}: {}", audit.value);
            assert!(!audit.incomplete);
        }
    }

    #[test]
    fn excitation_norm_of_free_decay() {
        let p = natural();
        let grid = TimeGrid::from_horizon(1e-3, 5.0).unwrap();
        let init = InitialCondition::new(Complex64::new(1.0, 0.0), ZERO);
        let vac = PacketSpec::vacuum(&p);
        let s = evolve_psi_ode(&p, &vac, &grid, &init).unwrap();
        let audit = excitation_norm(
            &p,
            &vac,
            &s,
            3.0,
            &SpatialGrid::new(-4.0, 4.0, 1e-3).unwrap(),
        )
        .unwrap();
        assert!((audit.value - 1.0).abs() < 1e-5);
    }

    #[test]
    fn snapshot_respects_light_cone() {
        let p = natural();
        let pk = PacketSpec::exponential(2.0, 1.5, &p).unwrap();
        let grid = TimeGrid::from_horizon(1e-3, 4.0).unwrap();
        let s = evolve_psi_ode(&p, &pk, &grid, &InitialCondition::default()).unwrap();
        let xs = [-5.0, -2.5, -0.1, 0.0, 0.1, 2.5, 5.0];
        let snap = field_snapshot(&p, &pk, &s, &xs, 2.0).unwrap();
        // ahead of the light cone the forward field is the free input
        assert_eq!(snap.forward[6], pk.amplitude_at(5.0 - 2.0));
        assert_eq!(snap.backward[0], ZERO);
        assert_eq!(snap.backward[1], ZERO);
        assert_ne!(snap.backward[2], ZERO);
    }
}
