//! Detector-side intensities and the interference signal in the forward
//! channel.
//!
//! All intensities are taken at the emitter in retarded time (detector at
//! `x_d -> 0`); a detector at `|x_d| > 0` sees the same series delayed by
//! `|x_d| / c`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dynamics::AmplitudeSeries;
use crate::error::{Error, Result};
use crate::generator::GeneratorSeries;
use crate::model::{InitialCondition, PacketSpec, PhysicalParams};
use crate::numeric::{cumulative_trapezoid, trapezoid};

/// One sample of every detector-side quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityRecord {
    pub t: f64,
    pub i0: f64,
    pub ia: f64,
    pub ib: f64,
    pub diff_dynamic: f64,
    pub diff_static: f64,
    pub phase_integral: f64,
}

/// `(I0, Ia, Ib)` at grid index `k`, computed from amplitudes.
pub fn intensities_at(
    params: &PhysicalParams,
    packet: &PacketSpec,
    psi: &AmplitudeSeries,
    k: usize,
) -> (f64, f64, f64) {
    let t = psi.grid.t(k);
    let c = params.c();
    let emitted = params.beta().sqrt() * psi.values[k];
    let input_a = packet.amplitude_at(-c * t);
    let input_b = packet.backward_amplitude_at(c * t);
    (
        input_a.norm_sqr(),
        (input_a + emitted).norm_sqr(),
        (input_b + emitted).norm_sqr(),
    )
}

/// Grid-time version of [`intensities_at`].
pub fn intensities(
    params: &PhysicalParams,
    packet: &PacketSpec,
    psi: &AmplitudeSeries,
    t: f64,
) -> Result<(f64, f64, f64)> {
    Ok(intensities_at(params, packet, psi, psi.index(t)?))
}

/// Intensity series on the amplitude grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensitySeries {
    pub i0: Vec<f64>,
    pub ia: Vec<f64>,
    pub ib: Vec<f64>,
}

pub fn intensity_series(
    params: &PhysicalParams,
    packet: &PacketSpec,
    psi: &AmplitudeSeries,
) -> IntensitySeries {
    let n = psi.len();
    let mut out = IntensitySeries {
        i0: Vec::with_capacity(n),
        ia: Vec::with_capacity(n),
        ib: Vec::with_capacity(n),
    };
    for k in 0..n {
        let (i0, ia, ib) = intensities_at(params, packet, psi, k);
        out.i0.push(i0);
        out.ia.push(ia);
        out.ib.push(ib);
    }
    out
}

/// Forward intensity from the interference formula:
/// `I0 + Ib + 2 sqrt(I0 Ib) cos(pi + phase_integral)`.
pub fn interference_formula(i0: f64, ib: f64, phase_integral: f64) -> f64 {
    i0 + ib + cross_term(i0, ib, phase_integral)
}

fn cross_term(i0: f64, ib: f64, phase: f64) -> f64 {
    2.0 * (i0 * ib).sqrt() * (PI + phase).cos()
}

/// `int_0^t (omega_L - omega_s) dt'` by trapezoid. Masked samples use the
/// continuous extension of the shift (`delta/2` for the leading run).
pub fn phase_integral_series(delta: f64, generator: &GeneratorSeries) -> Vec<f64> {
    let integrand: Vec<f64> = generator
        .shift_extended(delta)
        .iter()
        .map(|s| delta - s)
        .collect();
    cumulative_trapezoid(&integrand, generator.grid.dt())
}

/// Detuning for which the interference formula with constant phase `pi`
/// holds: exponential forward packet with a positive real amplitude factor
/// and an initially unexcited emitter.
pub fn formula_detuning(packet: &PacketSpec, init: &InitialCondition) -> Result<f64> {
    let Some((delta, _)) = packet.exponential_shape() else {
        return Err(Error::NotApplicable(
            "interference formula needs an exponential packet".into(),
        ));
    };
    let scale = packet.scale();
    if scale.im != 0.0 || scale.re <= 0.0 {
        return Err(Error::NotApplicable(
            "packet amplitude factor must be real and positive".into(),
        ));
    }
    if init.psi0 != Complex64::new(0.0, 0.0) {
        return Err(Error::NotApplicable(
            "interference formula needs psi(0) = 0".into(),
        ));
    }
    Ok(delta)
}

/// `Ia` from the interference formula on the whole grid.
pub fn interference_series(
    packet: &PacketSpec,
    init: &InitialCondition,
    intensities: &IntensitySeries,
    generator: &GeneratorSeries,
) -> Result<Vec<f64>> {
    let delta = formula_detuning(packet, init)?;
    let phase = phase_integral_series(delta, generator);
    Ok(intensities
        .i0
        .iter()
        .zip(&intensities.ib)
        .zip(&phase)
        .map(|((&i0, &ib), &ph)| interference_formula(i0, ib, ph))
        .collect())
}

/// Frequency used for the emitter in the interference phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyMode {
    /// The time-dependent `omega_s(t)`.
    Dynamic,
    /// `omega_s` replaced by the static `omega0`.
    Static,
}

/// `(Ia - I0) - Ib`, i.e. the interference cross term, with the phase
/// accumulated from `omega_L - omega_s(t)` or from `omega_L - omega0`.
pub fn difference_signal(
    packet: &PacketSpec,
    init: &InitialCondition,
    intensities: &IntensitySeries,
    generator: &GeneratorSeries,
    mode: FrequencyMode,
) -> Result<Vec<f64>> {
    let delta = formula_detuning(packet, init)?;
    let grid = generator.grid;
    let phase: Vec<f64> = match mode {
        FrequencyMode::Dynamic => phase_integral_series(delta, generator),
        FrequencyMode::Static => grid.times().map(|t| delta * t).collect(),
    };
    Ok(intensities
        .i0
        .iter()
        .zip(&intensities.ib)
        .zip(&phase)
        .map(|((&i0, &ib), &ph)| cross_term(i0, ib, ph))
        .collect())
}

/// Full per-sample records for an exponential packet.
pub fn intensity_records(
    packet: &PacketSpec,
    init: &InitialCondition,
    intensities: &IntensitySeries,
    generator: &GeneratorSeries,
) -> Result<Vec<IntensityRecord>> {
    let delta = formula_detuning(packet, init)?;
    let phase = phase_integral_series(delta, generator);
    let dynamic = difference_signal(packet, init, intensities, generator, FrequencyMode::Dynamic)?;
    let stat = difference_signal(packet, init, intensities, generator, FrequencyMode::Static)?;
    Ok((0..phase.len())
        .map(|k| IntensityRecord {
            t: generator.grid.t(k),
            i0: intensities.i0[k],
            ia: intensities.ia[k],
            ib: intensities.ib[k],
            diff_dynamic: dynamic[k],
            diff_static: stat[k],
            phase_integral: phase[k],
        })
        .collect())
}

/// Long-packet reflection and transmission, `(R, T)` with `R + T = 1`.
pub fn monochromatic_ratios(delta: f64, gamma_1d: f64) -> (f64, f64) {
    let g2 = gamma_1d * gamma_1d;
    let r = g2 / (g2 + 4.0 * delta * delta);
    // complement form keeps the sum exactly one in floating point
    (r, 1.0 - r)
}

/// Time integral of a decaying series over the grid plus an exponential
/// tail fitted to the last tenth of the samples.
pub fn integrate_with_tail(series: &[f64], dt: f64) -> f64 {
    let body = trapezoid(series, dt);
    let n = series.len();
    if n < 20 {
        return body;
    }
    let last = series[n - 1];
    let back = series[n - 1 - n / 10];
    let span = (n / 10) as f64 * dt;
    if last <= 0.0 || back <= last {
        return body;
    }
    let rate = (back / last).ln() / span;
    body + last / rate
}

/// Horizon used for time-integrated checks, `20 / min(gamma_1d, linewidth)`.
pub fn integration_horizon(gamma_1d: f64, linewidth: f64) -> f64 {
    20.0 / gamma_1d.min(linewidth)
}
