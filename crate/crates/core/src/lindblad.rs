//! Reduced emitter state under the exact time-dependent master equation
//! `d rho/dt = -i [omega_s(t) sigma+ sigma-, rho] + Gamma(t) D[sigma-] rho`.
//!
//! Only `rho_ee` and `rho_eg` are stored; `rho_gg = 1 - rho_ee` and
//! `rho_ge = conj(rho_eg)`, so the trace is one by construction.

use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::dynamics::AmplitudeSeries;
use crate::error::{Error, Result};
use crate::generator::GeneratorSeries;
use crate::model::TimeGrid;

/// Largest `|coefficient| * dt` treated as resolved by the grid.
pub const DEFAULT_REGULARITY: f64 = 5e-3;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DensityMatrix2 {
    pub ee: f64,
    pub eg: Complex64,
}

impl DensityMatrix2 {
    pub fn new(ee: f64, eg: Complex64) -> Result<Self> {
        let rho = Self { ee, eg };
        if !rho.is_physical(1e-9) {
            return Err(Error::domain(
                "rho0",
                format!("not a density matrix: ee = {ee}, eg = {eg}"),
            ));
        }
        Ok(rho)
    }

    pub fn ground() -> Self {
        Self::default()
    }

    /// Reduced state of `c0 |g,0> + psi |e,0> + (one photon)`.
    pub fn from_amplitudes(psi: Complex64, c0: Complex64) -> Self {
        Self {
            ee: psi.norm_sqr(),
            eg: psi * c0.conj(),
        }
    }

    pub fn gg(&self) -> f64 {
        1.0 - self.ee
    }

    /// Full matrix in the `(e, g)` basis.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        [
            [Complex64::new(self.ee, 0.0), self.eg],
            [self.eg.conj(), Complex64::new(self.gg(), 0.0)],
        ]
    }

    pub fn trace(&self) -> f64 {
        let m = self.matrix();
        m[0][0].re + m[1][1].re
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        self.ee.is_finite()
            && self.eg.is_finite()
            && self.ee >= -tol
            && self.ee <= 1.0 + tol
            && self.eg.norm_sqr() <= self.ee * (1.0 - self.ee) + tol
    }
}

impl Add for DensityMatrix2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            ee: self.ee + o.ee,
            eg: self.eg + o.eg,
        }
    }
}

impl Mul<f64> for DensityMatrix2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self {
            ee: self.ee * s,
            eg: self.eg * s,
        }
    }
}

/// Time derivative of the reduced state (rotating frame, `shift = omega_s - omega0`).
pub fn lindblad_rhs(rho: DensityMatrix2, shift: f64, rate: f64) -> DensityMatrix2 {
    DensityMatrix2 {
        ee: -rate * rho.ee,
        eg: Complex64::new(-0.5 * rate, -shift) * rho.eg,
    }
}

/// Exact amplitudes used to seed the propagator where the generator is
/// singular.
#[derive(Debug, Clone)]
pub struct ExactReference {
    pub psi: AmplitudeSeries,
    pub c0: Complex64,
}

impl ExactReference {
    fn state(&self, k: usize) -> DensityMatrix2 {
        DensityMatrix2::from_amplitudes(self.psi.values[k], self.c0)
    }
}

/// Generator coefficients plus the rule for crossing their singularities.
#[derive(Debug, Clone)]
pub struct GeneratorInput {
    pub generator: GeneratorSeries,
    pub exact: Option<ExactReference>,
    /// After a masked stretch, integration restarts at the first sample with
    /// `|rate| dt` and `|shift| dt` at most this value.
    pub regularity: f64,
}

impl GeneratorInput {
    pub fn new(generator: GeneratorSeries) -> Self {
        Self {
            generator,
            exact: None,
            regularity: DEFAULT_REGULARITY,
        }
    }

    pub fn with_exact(
        generator: GeneratorSeries,
        psi: AmplitudeSeries,
        c0: Complex64,
    ) -> Result<Self> {
        if psi.grid != generator.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            generator,
            exact: Some(ExactReference { psi, c0 }),
            regularity: DEFAULT_REGULARITY,
        })
    }

    /// Resolved well enough by the grid to restart integration here.
    fn seedable(&self, k: usize) -> bool {
        let g = &self.generator;
        let dt = g.grid.dt();
        g.valid[k]
            && g.rate[k].abs() * dt <= self.regularity
            && g.shift[k].abs() * dt <= self.regularity
    }
}

/// Propagated reduced states. `propagated[k]` is false where the state was
/// copied from the exact reference instead of integrated.
#[derive(Debug, Clone)]
pub struct MasterSeries {
    pub grid: TimeGrid,
    pub states: Vec<DensityMatrix2>,
    pub propagated: Vec<bool>,
    /// Index where each integrated segment starts.
    pub seeds: Vec<usize>,
}

/// RK4 with linearly interpolated coefficients at the half step.
///
/// The generator diverges where `psi` vanishes (always at `t = 0` for an
/// initially unexcited emitter). Masked samples are never integrated
/// through: the state there is copied from the exact reference and
/// integration restarts from the exact state at the first following sample
/// whose coefficients the grid resolves (see [`GeneratorInput::regularity`]).
pub fn propagate_master(
    input: &GeneratorInput,
    rho0: DensityMatrix2,
    grid: &TimeGrid,
) -> Result<MasterSeries> {
    let g = &input.generator;
    if g.grid != *grid {
        return Err(Error::GridMismatch);
    }
    if g.valid_count() == 0 {
        return Err(Error::NoValidSupport);
    }
    let n = grid.n_steps();
    let dt = grid.dt();

    let mut states = Vec::with_capacity(n);
    let mut propagated = Vec::with_capacity(n);
    let mut seeds = Vec::new();
    let mut active = g.valid[0];
    if active {
        seeds.push(0);
        states.push(rho0);
        propagated.push(true);
    } else {
        let exact = input.exact.as_ref().ok_or(Error::MissingSeed {
            index: g.valid.iter().position(|&v| v).unwrap_or(0),
        })?;
        states.push(exact.state(0));
        propagated.push(false);
    }

    for k in 0..n - 1 {
        if active && g.valid[k + 1] {
            let rho = states[k];
            let (s0, s1) = (g.shift[k], g.shift[k + 1]);
            let (r0, r1) = (g.rate[k], g.rate[k + 1]);
            let (sm, rm) = (0.5 * (s0 + s1), 0.5 * (r0 + r1));
            let k1 = lindblad_rhs(rho, s0, r0);
            let k2 = lindblad_rhs(rho + k1 * (0.5 * dt), sm, rm);
            let k3 = lindblad_rhs(rho + k2 * (0.5 * dt), sm, rm);
            let k4 = lindblad_rhs(rho + k3 * dt, s1, r1);
            states.push(rho + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0));
            propagated.push(true);
            continue;
        }
        let exact = input
            .exact
            .as_ref()
            .ok_or(Error::MissingSeed { index: k + 1 })?;
        active = input.seedable(k + 1);
        if active {
            seeds.push(k + 1);
        }
        states.push(exact.state(k + 1));
        propagated.push(active);
    }
    Ok(MasterSeries {
        grid: *grid,
        states,
        propagated,
        seeds,
    })
}

/// Maximum deviations of the propagated state from the exact reduced state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crosscheck {
    pub population: f64,
    /// `max |rho_eg - psi c0*|`, reported when `c0 != 0`.
    pub coherence: Option<f64>,
    pub compared: usize,
}

pub fn crosscheck_population(
    master: &MasterSeries,
    psi: &AmplitudeSeries,
    c0: Complex64,
) -> Result<Crosscheck> {
    if master.grid != psi.grid {
        return Err(Error::GridMismatch);
    }
    let mut population = 0.0f64;
    let mut coherence = 0.0f64;
    let mut compared = 0;
    for ((rho, v), &used) in master
        .states
        .iter()
        .zip(&psi.values)
        .zip(&master.propagated)
    {
        if !used {
            continue;
        }
        compared += 1;
        population = population.max((rho.ee - v.norm_sqr()).abs());
        coherence = coherence.max((rho.eg - v * c0.conj()).norm());
    }
    Ok(Crosscheck {
        population,
        coherence: (c0 != Complex64::new(0.0, 0.0)).then_some(coherence),
        compared,
    })
}

/// `rho_ee(t) = rho_ee(t0) exp(-int_{t0}^t Gamma)` on each integrated
/// segment, trapezoid quadrature at grid resolution.
pub fn population_shortcut(input: &GeneratorInput, master: &MasterSeries) -> Vec<Option<f64>> {
    let g = &input.generator;
    let dt = g.grid.dt();
    let mut out = vec![None; master.states.len()];
    let mut seed_ee = 0.0;
    let mut integral = 0.0;
    for k in 0..out.len() {
        if !master.propagated[k] {
            continue;
        }
        if master.seeds.contains(&k) {
            seed_ee = master.states[k].ee;
            integral = 0.0;
        } else {
            integral += 0.5 * dt * (g.rate[k - 1] + g.rate[k]);
        }
        out[k] = Some(seed_ee * (-integral).exp());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::evolve_psi_ode;
    use crate::generator::{stark_shift_numeric, EPS_PSI};
    use crate::model::{InitialCondition, PacketSpec, PhysicalParams};

    fn constant_generator(grid: TimeGrid, shift: f64, rate: f64) -> GeneratorSeries {
        let n = grid.n_steps();
        GeneratorSeries {
            grid,
            shift: vec![shift; n],
            rate: vec![rate; n],
            valid: vec![true; n],
        }
    }

    #[test]
    fn spontaneous_emission() {
        let grid = TimeGrid::from_horizon(1e-3, 5.0).unwrap();
        let input = GeneratorInput::new(constant_generator(grid, 0.0, 1.0));
        let rho0 = DensityMatrix2::new(1.0, Complex64::new(0.0, 0.0)).unwrap();
        let m = propagate_master(&input, rho0, &grid).unwrap();
        for (k, r) in m.states.iter().enumerate() {
            assert!((r.ee - (-grid.t(k)).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn coherence_winds_at_the_shift() {
        let grid = TimeGrid::from_horizon(1e-3, 4.0).unwrap();
        let delta = 3.0;
        let input = GeneratorInput::new(constant_generator(grid, 0.5 * delta, 0.0));
        let rho0 = DensityMatrix2::new(0.5, Complex64::new(0.4, 0.0)).unwrap();
        let m = propagate_master(&input, rho0, &grid).unwrap();
        for (k, r) in m.states.iter().enumerate() {
            let expect = Complex64::from_polar(0.4, -0.5 * delta * grid.t(k));
            assert!((r.eg - expect).norm() < 1e-11);
            assert_eq!(r.ee, 0.5);
        }
    }

    #[test]
    fn negative_rate_pumps_population() {
        let rho = DensityMatrix2::new(0.2, Complex64::new(0.0, 0.0)).unwrap();
        assert!(lindblad_rhs(rho, 0.0, -1.5).ee > 0.0);
        assert!(lindblad_rhs(rho, 0.0, 1.5).ee < 0.0);
    }

    #[test]
    fn zero_generator_freezes_state() {
        let grid = TimeGrid::from_horizon(0.01, 1.0).unwrap();
        let input = GeneratorInput::new(constant_generator(grid, 0.0, 0.0));
        let rho0 = DensityMatrix2::new(0.3, Complex64::new(0.1, -0.2)).unwrap();
        let m = propagate_master(&input, rho0, &grid).unwrap();
        assert!(m.states.iter().all(|r| *r == rho0));
        assert!(m.states.iter().all(|r| r.trace() == 1.0));
    }

    #[test]
    fn all_masked_generator_is_rejected() {
        let grid = TimeGrid::from_horizon(0.01, 1.0).unwrap();
        let mut g = constant_generator(grid, 0.0, 0.0);
        g.valid.iter_mut().for_each(|v| *v = false);
        let err =
            propagate_master(&GeneratorInput::new(g), DensityMatrix2::ground(), &grid).unwrap_err();
        assert!(matches!(err, Error::NoValidSupport));
    }

    #[test]
    fn masked_start_needs_seed() {
        let grid = TimeGrid::from_horizon(0.01, 1.0).unwrap();
        let mut g = constant_generator(grid, 0.0, 0.0);
        g.valid[0] = false;
        let err =
            propagate_master(&GeneratorInput::new(g), DensityMatrix2::ground(), &grid).unwrap_err();
        assert!(matches!(err, Error::MissingSeed { index: 1 }));
    }

    #[test]
    fn rejects_unphysical_states() {
        assert!(DensityMatrix2::new(1.2, Complex64::new(0.0, 0.0)).is_err());
        assert!(DensityMatrix2::new(0.5, Complex64::new(0.6, 0.0)).is_err());
    }

    fn exact_run(d: f64, w: f64, c0: f64) -> (GeneratorInput, MasterSeries, AmplitudeSeries) {
        let p = PhysicalParams::default();
        let weight = (1.0 - c0 * c0).sqrt();
        let pk = PacketSpec::exponential(d, w, &p)
            .unwrap()
            .scaled(Complex64::new(weight, 0.0));
        let grid = TimeGrid::from_horizon(1e-3, 10.0).unwrap();
        let init = InitialCondition::new(Complex64::new(0.0, 0.0), Complex64::new(c0, 0.0));
        let psi = evolve_psi_ode(&p, &pk, &grid, &init).unwrap();
        let gen = stark_shift_numeric(&psi, EPS_PSI);
        let input = GeneratorInput::with_exact(gen, psi.clone(), init.c0).unwrap();
        let rho0 = DensityMatrix2::from_amplitudes(init.psi0, init.c0);
        let m = propagate_master(&input, rho0, &grid).unwrap();
        (input, m, psi)
    }

    #[test]
    fn master_equation_reproduces_exact_population() {
        for &(d, w) in &[(3.0, 0.9), (5.0, 0.1), (0.1, 5.0)] {
            let (_, m, psi) = exact_run(d, w, 0.0);
            let check = crosscheck_population(&m, &psi, Complex64::new(0.0, 0.0)).unwrap();
            assert!(check.population <= 1e-6, "{d} {w}: {}", check.population);
            assert!(check.compared > 9000);
        }
    }

    #[test]
    fn coherence_extension() {
        let (_, m, psi) = exact_run(3.0, 0.9, 0.6);
        let check = crosscheck_population(&m, &psi, Complex64::new(0.6, 0.0)).unwrap();
        assert!(check.population <= 1e-6);
        assert!(check.coherence.unwrap() <= 1e-6, "{:?}", check);
        assert!(m.states.iter().all(|r| r.is_physical(1e-9)));
    }

    #[test]
    fn shortcut_matches_rk4() {
        let (input, m, _) = exact_run(3.0, 0.9, 0.0);
        let short = population_shortcut(&input, &m);
        for (k, s) in short.iter().enumerate() {
            if let Some(v) = s {
                assert!((v - m.states[k].ee).abs() <= 1e-7, "k={k}");
            }
        }
    }

    #[test]
    fn corrupted_rate_is_detected() {
        let (mut input, _, psi) = exact_run(3.0, 0.9, 0.0);
        input.generator.rate.iter_mut().for_each(|r| *r *= 1.1);
        let grid = input.generator.grid;
        let m = propagate_master(&input, DensityMatrix2::ground(), &grid).unwrap();
        let check = crosscheck_population(&m, &psi, Complex64::new(0.0, 0.0)).unwrap();
        assert!(check.population > 1e-3, "{}", check.population);
    }

    #[test]
    fn grid_mismatch() {
        let (_, m, _) = exact_run(3.0, 0.9, 0.0);
        let other = AmplitudeSeries::new(
            TimeGrid::from_horizon(1e-3, 5.0).unwrap(),
            vec![Complex64::new(0.0, 0.0); 5001],
        )
        .unwrap();
        assert!(matches!(
            crosscheck_population(&m, &other, Complex64::new(0.0, 0.0)),
            Err(Error::GridMismatch)
        ));
    }
}
