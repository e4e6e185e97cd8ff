//! Effective generator of the reduced emitter dynamics.
//!
//! Writing `d psi/dt = (-Gamma(t)/2 - i omega_s(t)) psi` defines the
//! instantaneous transition frequency and decay rate from the logarithmic
//! derivative of the exact amplitude. In the rotating frame the shift
//! `omega_s - omega0` is `-Im[psi~'/psi~]`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dynamics::AmplitudeSeries;
use crate::error::{Error, Result};
use crate::model::{PacketSpec, PhysicalParams, TimeGrid};
use crate::numeric::{derivative_masked, exprel};

/// Default masking threshold on `|psi~|`.
pub const EPS_PSI: f64 = 1e-8;

/// `omega_s(t) - omega0` for the exponential packet (time derivative of the
/// arctangent phase).
pub fn stark_shift_closed_form(delta: f64, linewidth: f64, gamma_1d: f64, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::domain("t", format!("must be >= 0, got {t}")));
    }
    let mu = 0.5 * (linewidth - gamma_1d);
    if t == 0.0 || mu.abs() < 1e-12 * gamma_1d {
        return Ok(0.5 * delta);
    }
    let (s, c) = (delta * t).sin_cos();
    let half_sin_sq = (0.5 * delta * t).sin().powi(2);
    let mt = mu * t;
    // numerator  delta - E (delta cos - mu sin),  denominator 1 - 2 E cos + E^2,
    // rewritten without cancellation and, for E > 1, divided by E^2
    let (num, den) = if mt <= 0.0 {
        let e = mt.exp();
        let one_minus_e = -mt.exp_m1();
        (
            delta * (one_minus_e + 2.0 * e * half_sin_sq) + mu * e * s,
            one_minus_e * one_minus_e + 4.0 * e * half_sin_sq,
        )
    } else {
        let f = (-mt).exp();
        let one_minus_f = -(-mt).exp_m1();
        (
            delta * f * f - f * (delta * c - mu * s),
            one_minus_f * one_minus_f + 4.0 * f * half_sin_sq,
        )
    };
    if den == 0.0 {
        return Ok(0.5 * delta);
    }
    Ok(num / den)
}

/// `kappa e^{kappa t} / (e^{kappa t} - 1)` without overflow or cancellation.
fn log_derivative_factor(kappa: Complex64, t: f64) -> Complex64 {
    let kt = kappa * t;
    if kt.norm() < 1.0 {
        1.0 / (t * exprel(-kt))
    } else if kt.re >= 0.0 {
        kappa / (1.0 - (-kt).exp())
    } else {
        let e = kt.exp();
        kappa * e / (e - 1.0)
    }
}

/// `Gamma(t) = -2 Re[psi'/psi]` for the exponential packet, `t > 0`.
pub fn decay_rate_closed_form(delta: f64, linewidth: f64, gamma_1d: f64, t: f64) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::domain("t", format!("must be > 0, got {t}")));
    }
    let kappa = Complex64::new(0.5 * (gamma_1d - linewidth), -delta);
    if kappa.norm() < 1e-12 * gamma_1d {
        return Ok(gamma_1d - 2.0 / t);
    }
    Ok(gamma_1d - 2.0 * log_derivative_factor(kappa, t).re)
}

/// Shift and rate samples with a validity mask. Masked entries hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSeries {
    pub grid: TimeGrid,
    pub shift: Vec<f64>,
    pub rate: Vec<f64>,
    pub valid: Vec<bool>,
}

impl GeneratorSeries {
    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Shift with masked samples filled in: a masked leading run takes the
    /// `t -> 0` limit `delta/2`, interior runs are bridged linearly, a
    /// trailing run holds the last valid value.
    pub fn shift_extended(&self, delta: f64) -> Vec<f64> {
        let n = self.shift.len();
        let mut out = self.shift.clone();
        let mut last_valid: Option<usize> = None;
        let mut k = 0;
        while k < n {
            if self.valid[k] {
                last_valid = Some(k);
                k += 1;
                continue;
            }
            let start = k;
            while k < n && !self.valid[k] {
                k += 1;
            }
            let next = (k < n).then_some(k);
            for j in start..k {
                out[j] = match (last_valid, next) {
                    (Some(a), Some(b)) => {
                        let s = (j - a) as f64 / (b - a) as f64;
                        self.shift[a] * (1.0 - s) + self.shift[b] * s
                    }
                    (Some(a), None) => self.shift[a],
                    (None, _) => 0.5 * delta,
                };
            }
        }
        out
    }
}

/// Finite-difference extraction of shift and rate from `psi~`.
///
/// Derivatives use five-point stencils restricted to runs of unmasked
/// samples (offset stencils next to a masked sample or a series end).
pub fn stark_shift_numeric(psi: &AmplitudeSeries, eps_psi: f64) -> GeneratorSeries {
    let (ratio, valid) = log_derivative(&psi.values, psi.grid.dt(), eps_psi);
    GeneratorSeries {
        grid: psi.grid,
        shift: ratio
            .iter()
            .map(|r| r.map_or(f64::NAN, |r| -r.im))
            .collect(),
        rate: ratio
            .iter()
            .map(|r| r.map_or(f64::NAN, |r| -2.0 * r.re))
            .collect(),
        valid,
    }
}

/// `a'/a` on samples with `|a| >= eps`.
fn log_derivative(values: &[Complex64], h: f64, eps: f64) -> (Vec<Option<Complex64>>, Vec<bool>) {
    let mut valid: Vec<bool> = values.iter().map(|v| v.norm() >= eps).collect();
    let ratio: Vec<Option<Complex64>> = derivative_masked(values, &valid, h)
        .into_iter()
        .zip(values)
        .map(|(d, v)| d.map(|d| d / v))
        .collect();
    // isolated samples have no derivative
    for (ok, r) in valid.iter_mut().zip(&ratio) {
        *ok &= r.is_some();
    }
    (ratio, valid)
}

/// `<H_int>/hbar = 2 g Im[phi~_in(0, t) psi~*(t)]` at grid index `k`.
///
/// The emitted part of the field at the emitter is `sqrt(beta) psi~`, whose
/// product with `psi~*` is real, so only the free input contributes.
pub fn interaction_energy_at(
    params: &PhysicalParams,
    packet: &PacketSpec,
    psi: &AmplitudeSeries,
    k: usize,
) -> f64 {
    let incoming = packet.drive_at(psi.grid.t(k), params.c());
    2.0 * params.g() * (incoming * psi.values[k].conj()).im
}

/// Grid-time version of [`interaction_energy_at`].
pub fn interaction_energy(
    params: &PhysicalParams,
    packet: &PacketSpec,
    psi: &AmplitudeSeries,
    t: f64,
) -> Result<f64> {
    Ok(interaction_energy_at(params, packet, psi, psi.index(t)?))
}

pub fn interaction_energy_series(
    params: &PhysicalParams,
    packet: &PacketSpec,
    psi: &AmplitudeSeries,
) -> Vec<f64> {
    (0..psi.len())
        .map(|k| interaction_energy_at(params, packet, psi, k))
        .collect()
}

/// Unwrapped phase of a complex series.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSeries {
    pub grid: TimeGrid,
    pub theta: Vec<f64>,
    pub valid: Vec<bool>,
}

/// Unwraps `arg(values)` by the nearest multiple of 2 pi per step; masked
/// samples hold NaN and do not reset the accumulated branch.
pub fn unwrap_phase(grid: TimeGrid, values: &[Complex64], eps: f64) -> PhaseSeries {
    let mut theta = Vec::with_capacity(values.len());
    let mut valid = Vec::with_capacity(values.len());
    let mut prev: Option<f64> = None;
    for v in values {
        if v.norm() < eps {
            theta.push(f64::NAN);
            valid.push(false);
            continue;
        }
        let raw = v.arg();
        let th = match prev {
            None => raw,
            Some(p) => raw + 2.0 * PI * ((p - raw) / (2.0 * PI)).round(),
        };
        prev = Some(th);
        theta.push(th);
        valid.push(true);
    }
    PhaseSeries { grid, theta, valid }
}

/// Instantaneous color of a field amplitude, `-d theta/dt`, reported
/// relative to `omega0` (absolute color is `omega0 + color`).
///
/// The rate is taken as `-Im[a'/a]`, which equals `-d theta/dt` without
/// differentiating across branch cuts; the unwrapped phase is kept
/// alongside for display and integration.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveColor {
    pub phase: PhaseSeries,
    pub color: Vec<f64>,
}

pub fn effective_color(grid: TimeGrid, values: &[Complex64], eps: f64) -> Result<EffectiveColor> {
    if values.len() < 3 || values.len() != grid.n_steps() {
        return Err(Error::domain(
            "series",
            "need at least three samples on the grid",
        ));
    }
    let phase = unwrap_phase(grid, values, eps);
    let (ratio, _) = log_derivative(values, grid.dt(), eps);
    let color = ratio
        .iter()
        .map(|r| r.map_or(f64::NAN, |r| -r.im))
        .collect();
    Ok(EffectiveColor { phase, color })
}
