//! Units, physical parameters and initial single-photon packets.
//!
//! Every complex amplitude in this crate lives in the frame rotating at the
//! (Lamb-shifted) emitter frequency `omega0`. For a right-moving field this
//! means `phi~(x, t) = phi(x, t) * exp(i omega0 (t - x / c))`, so the carrier
//! `exp(i omega_L x / c)` of a packet is stored as `exp(i delta x / c)` with
//! `delta = omega_L - omega0`. Absolute frequencies are `omega0 + shift`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the emitter/waveguide system.
///
/// `g` and `beta` are derived on construction and never set independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    gamma_1d: f64,
    omega0: f64,
    rho_1d: f64,
    c: f64,
    g: f64,
    beta: f64,
}

impl PhysicalParams {
    pub fn new(gamma_1d: f64, omega0: f64, rho_1d: f64, c: f64) -> Result<Self> {
        positive("gamma_1d", gamma_1d)?;
        positive("rho_1d", rho_1d)?;
        positive("c", c)?;
        if !(omega0.is_finite() && omega0 >= 0.0) {
            return Err(Error::domain(
                "omega0",
                format!("must be finite and >= 0, got {omega0}"),
            ));
        }
        Ok(Self {
            gamma_1d,
            omega0,
            rho_1d,
            c,
            g: coupling_from(gamma_1d, rho_1d),
            beta: emission_weight_from(gamma_1d, rho_1d),
        })
    }

    /// Natural units: `gamma_1d = c = 1`, `rho_1d = 1/(2 pi)`.
    pub fn natural(omega0: f64) -> Result<Self> {
        Self::new(1.0, omega0, 1.0 / (2.0 * PI), 1.0)
    }

    pub fn gamma_1d(&self) -> f64 {
        self.gamma_1d
    }
    pub fn omega0(&self) -> f64 {
        self.omega0
    }
    pub fn rho_1d(&self) -> f64 {
        self.rho_1d
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    /// Emitter/mode coupling rate, `sqrt(gamma_1d / (4 pi rho_1d))`.
    pub fn g(&self) -> f64 {
        self.g
    }
    /// Weight of the emitted field amplitude, `gamma_1d * pi * rho_1d`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `2 pi rho_1d c`: real-space norm of a single photon.
    pub fn photon_norm(&self) -> f64 {
        2.0 * PI * self.rho_1d * self.c
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::natural(1e6).expect("natural units are valid")
    }
}

fn positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(
            field,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

pub(crate) fn coupling_from(gamma_1d: f64, rho_1d: f64) -> f64 {
    (gamma_1d / (4.0 * PI * rho_1d)).sqrt()
}

pub(crate) fn emission_weight_from(gamma_1d: f64, rho_1d: f64) -> f64 {
    gamma_1d * PI * rho_1d
}

/// Which one-sided limit to take at a discontinuity of an envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Linearly interpolated complex samples, zero outside `[xs[0], xs[n-1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    xs: Vec<f64>,
    values: Vec<Complex64>,
}

impl Table {
    pub fn new(xs: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if xs.len() != values.len() {
            return Err(Error::domain(
                "packet.samples",
                "x and amplitude columns differ in length",
            ));
        }
        if xs.len() == 1 {
            return Err(Error::domain(
                "packet.samples",
                "a table needs at least two samples",
            ));
        }
        if xs.iter().any(|x| !x.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("packet.samples", "non-finite sample"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain(
                "packet.samples",
                "x must be strictly increasing",
            ));
        }
        Ok(Self { xs, values })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    fn support(&self) -> Option<(f64, f64)> {
        Some((*self.xs.first()?, *self.xs.last()?))
    }

    fn eval(&self, x: f64, side: Option<Side>) -> Complex64 {
        let Some((lo, hi)) = self.support() else {
            return Complex64::new(0.0, 0.0);
        };
        let inside = match side {
            None => x >= lo && x <= hi,
            Some(Side::Left) => x > lo && x <= hi,
            Some(Side::Right) => x >= lo && x < hi,
        };
        if !inside {
            return Complex64::new(0.0, 0.0);
        }
        let i = self
            .xs
            .partition_point(|&xi| xi <= x)
            .saturating_sub(1)
            .min(self.xs.len() - 2);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let s = (x - x0) / (x1 - x0);
        self.values[i] * (1.0 - s) + self.values[i + 1] * s
    }

    /// Exact integral of the squared modulus of the interpolant.
    fn integral_sq(&self) -> f64 {
        self.xs
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| {
                let h = x[1] - x[0];
                h * (v[0].norm_sqr() + v[1].norm_sqr() + (v[0] * v[1].conj()).re) / 3.0
            })
            .sum()
    }
}

/// Spatial profile of one propagation direction at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Envelope {
    /// `N Theta(-x) exp[(linewidth/2 + i delta) x / c]`, the shape left by
    /// spontaneous emission from a remote emitter.
    Exponential {
        delta: f64,
        linewidth: f64,
        norm_factor: f64,
        c: f64,
    },
    Tabulated(Table),
}

impl Envelope {
    /// Amplitude at `x`; `Theta(0) = 1` for the exponential front.
    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            Envelope::Exponential { .. } => self.eval_side(x, Side::Left),
            Envelope::Tabulated(t) => t.eval(x, None),
        }
    }

    pub fn eval_side(&self, x: f64, side: Side) -> Complex64 {
        match *self {
            Envelope::Exponential {
                delta,
                linewidth,
                norm_factor,
                c,
            } => {
                let inside = match side {
                    Side::Left => x <= 0.0,
                    Side::Right => x < 0.0,
                };
                if inside {
                    norm_factor * (Complex64::new(0.5 * linewidth, delta) * (x / c)).exp()
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Envelope::Tabulated(ref t) => t.eval(x, Some(side)),
        }
    }

    /// Points where the envelope may jump.
    pub fn discontinuities(&self) -> Vec<f64> {
        match self {
            Envelope::Exponential { .. } => vec![0.0],
            Envelope::Tabulated(t) => t.support().map(|(a, b)| vec![a, b]).unwrap_or_default(),
        }
    }

    fn integral_sq(&self) -> f64 {
        match *self {
            Envelope::Exponential {
                linewidth,
                norm_factor,
                c,
                ..
            } => norm_factor * norm_factor * c / linewidth,
            Envelope::Tabulated(ref t) => t.integral_sq(),
        }
    }
}

/// Initial single-photon field: forward (channel a) and backward (channel b)
/// envelopes plus a global complex amplitude factor.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketSpec {
    forward: Option<Envelope>,
    backward: Option<Envelope>,
    scale: Complex64,
    photon_norm: f64,
}

impl PacketSpec {
    /// Exponential right-moving packet with `phi_b(x, 0) = 0`.
    pub fn exponential(delta: f64, linewidth: f64, params: &PhysicalParams) -> Result<Self> {
        if !(linewidth.is_finite() && linewidth > 0.0) {
            return Err(Error::domain(
                "packet.linewidth",
                format!("must be > 0, got {linewidth}"),
            ));
        }
        if !delta.is_finite() {
            return Err(Error::domain("packet.delta", "must be finite"));
        }
        Ok(Self {
            forward: Some(Envelope::Exponential {
                delta,
                linewidth,
                norm_factor: (2.0 * PI * params.rho_1d() * linewidth).sqrt(),
                c: params.c(),
            }),
            backward: None,
            scale: Complex64::new(1.0, 0.0),
            photon_norm: params.photon_norm(),
        })
    }

    /// Right-moving packet from rotating-frame samples. A nonzero `delta`
    /// multiplies the samples by the carrier `exp(i delta x / c)`.
    pub fn tabulated(
        xs: Vec<f64>,
        amplitudes: Vec<Complex64>,
        delta: f64,
        params: &PhysicalParams,
    ) -> Result<Self> {
        let c = params.c();
        let values = xs
            .iter()
            .zip(amplitudes)
            .map(|(&x, a)| a * Complex64::from_polar(1.0, delta * x / c))
            .collect();
        Ok(Self {
            forward: Some(Envelope::Tabulated(Table::new(xs, values)?)),
            backward: None,
            scale: Complex64::new(1.0, 0.0),
            photon_norm: params.photon_norm(),
        })
    }

    /// No photon at all.
    pub fn vacuum(params: &PhysicalParams) -> Self {
        Self {
            forward: None,
            backward: None,
            scale: Complex64::new(1.0, 0.0),
            photon_norm: params.photon_norm(),
        }
    }

    /// Adds a left-moving component `phi_b(x, 0)`, given in the rotating frame.
    pub fn with_backward(mut self, envelope: Envelope) -> Self {
        self.backward = Some(envelope);
        self
    }

    /// Multiplies every amplitude by `lambda` (no renormalization).
    pub fn scaled(mut self, lambda: Complex64) -> Self {
        self.scale *= lambda;
        self
    }

    pub fn forward(&self) -> Option<&Envelope> {
        self.forward.as_ref()
    }
    pub fn backward(&self) -> Option<&Envelope> {
        self.backward.as_ref()
    }
    pub fn scale(&self) -> Complex64 {
        self.scale
    }

    /// `(delta, linewidth)` when this is a plain exponential packet.
    pub fn exponential_shape(&self) -> Option<(f64, f64)> {
        match (&self.forward, &self.backward) {
            (
                Some(Envelope::Exponential {
                    delta, linewidth, ..
                }),
                None,
            ) => Some((*delta, *linewidth)),
            _ => None,
        }
    }

    /// Detuning of the carrier, if the packet has one.
    pub fn delta(&self) -> Option<f64> {
        match &self.forward {
            Some(Envelope::Exponential { delta, .. }) => Some(*delta),
            _ => None,
        }
    }

    /// Forward amplitude `phi~_a(x, 0)`.
    pub fn amplitude_at(&self, x: f64) -> Complex64 {
        self.forward
            .as_ref()
            .map_or(Complex64::new(0.0, 0.0), |e| self.scale * e.eval(x))
    }

    pub fn amplitude_at_side(&self, x: f64, side: Side) -> Complex64 {
        self.forward.as_ref().map_or(Complex64::new(0.0, 0.0), |e| {
            self.scale * e.eval_side(x, side)
        })
    }

    /// Backward amplitude `phi~_b(x, 0)`.
    pub fn backward_amplitude_at(&self, x: f64) -> Complex64 {
        self.backward
            .as_ref()
            .map_or(Complex64::new(0.0, 0.0), |e| self.scale * e.eval(x))
    }

    pub fn backward_amplitude_at_side(&self, x: f64, side: Side) -> Complex64 {
        self.backward
            .as_ref()
            .map_or(Complex64::new(0.0, 0.0), |e| {
                self.scale * e.eval_side(x, side)
            })
    }

    /// Total field amplitude reaching the emitter at time `t` (the drive):
    /// `phi~_a(-c t, 0) + phi~_b(c t, 0)`.
    pub fn drive_at(&self, t: f64, c: f64) -> Complex64 {
        self.amplitude_at(-c * t) + self.backward_amplitude_at(c * t)
    }

    /// Exact photon probability carried by the packet.
    pub fn norm_fraction(&self) -> f64 {
        let total: f64 = self
            .forward
            .iter()
            .chain(self.backward.iter())
            .map(Envelope::integral_sq)
            .sum();
        self.scale.norm_sqr() * total / self.photon_norm
    }

    /// Linewidth of the forward exponential envelope, if any.
    pub fn linewidth(&self) -> Option<f64> {
        match &self.forward {
            Some(Envelope::Exponential { linewidth, .. }) => Some(*linewidth),
            _ => None,
        }
    }

    fn discontinuities(&self) -> Vec<f64> {
        self.forward
            .iter()
            .chain(self.backward.iter())
            .flat_map(Envelope::discontinuities)
            .collect()
    }
}

/// Uniform time grid starting at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::domain("grid.dt", format!("must be > 0, got {dt}")));
        }
        if n_steps < 2 {
            return Err(Error::domain("grid.n_steps", "need at least two samples"));
        }
        Ok(Self { dt, n_steps })
    }

    /// Grid `0, dt, ..., t_max` (t_max rounded to the nearest step).
    pub fn from_horizon(dt: f64, t_max: f64) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::domain(
                "grid.t_max",
                format!("must be > 0, got {t_max}"),
            ));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::domain("grid.dt", format!("must be > 0, got {dt}")));
        }
        Self::new(dt, (t_max / dt).round() as usize + 1)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }
    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
    pub fn t_max(&self) -> f64 {
        self.t(self.n_steps - 1)
    }
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_steps).map(|k| self.t(k))
    }

    /// Index of `t` if it coincides with a grid point.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = (t / self.dt).round();
        if k < 0.0 || k as usize >= self.n_steps {
            return None;
        }
        ((t - k * self.dt).abs() <= 1e-9 * self.dt).then_some(k as usize)
    }
}

/// Uniform spatial quadrature grid `[start, end]` with nominal `step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl SpatialGrid {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && end > start) {
            return Err(Error::domain("spatial_grid", "need finite start < end"));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::domain("spatial_grid.step", "must be > 0"));
        }
        Ok(Self { start, end, step })
    }
}

/// Outcome of a normalization audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormAudit {
    /// Norm in units of one photon.
    pub value: f64,
    /// The grid step is coarser than `0.01 c / linewidth`.
    pub coarse: bool,
    /// The grid misses part of the support.
    pub incomplete: bool,
}

/// Trapezoid rule on `[a, b]` with at most `step` spacing, taking inner
/// one-sided limits at both ends.
pub(crate) fn integrate_segment(
    a: f64,
    b: f64,
    step: f64,
    f: impl Fn(f64, Option<Side>) -> f64,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = ((b - a) / step).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    let interior: f64 = (1..n).map(|i| f(a + i as f64 * h, None)).sum();
    h * (0.5 * f(a, Some(Side::Right)) + interior + 0.5 * f(b, Some(Side::Left)))
}

/// Integrates over `[start, end]`, splitting at the given jump points.
pub(crate) fn integrate_piecewise(
    start: f64,
    end: f64,
    step: f64,
    breaks: &[f64],
    f: impl Fn(f64, Option<Side>) -> f64,
) -> f64 {
    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&x| x > start && x < end)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut nodes = Vec::with_capacity(cuts.len() + 2);
    nodes.push(start);
    nodes.extend(cuts);
    nodes.push(end);
    nodes
        .windows(2)
        .map(|w| integrate_segment(w[0], w[1], step, &f))
        .sum()
}

/// Trapezoidal audit of the packet's real-space norm in photon units.
pub fn packet_norm(packet: &PacketSpec, grid: &SpatialGrid) -> NormAudit {
    let density = |x: f64, side: Option<Side>| match side {
        None => packet.amplitude_at(x).norm_sqr() + packet.backward_amplitude_at(x).norm_sqr(),
        Some(s) => {
            packet.amplitude_at_side(x, s).norm_sqr()
                + packet.backward_amplitude_at_side(x, s).norm_sqr()
        }
    };
    let value = integrate_piecewise(
        grid.start,
        grid.end,
        grid.step,
        &packet.discontinuities(),
        density,
    ) / packet.photon_norm;

    let mut coarse = false;
    let mut incomplete = false;
    for env in packet.forward.iter().chain(packet.backward.iter()) {
        match *env {
            Envelope::Exponential { linewidth, c, .. } => {
                let length = c / linewidth;
                coarse |= grid.step > 0.01 * length;
                incomplete |= grid.start > -10.0 * length || grid.end < 0.0;
            }
            Envelope::Tabulated(ref t) => {
                if let Some((lo, hi)) = t.support() {
                    incomplete |= grid.start > lo || grid.end < hi;
                }
            }
        }
    }
    NormAudit {
        value,
        coarse,
        incomplete,
    }
}

/// Initial emitter amplitudes; the remaining probability sits in the packet.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InitialCondition {
    pub psi0: Complex64,
    pub c0: Complex64,
}

impl InitialCondition {
    pub fn new(psi0: Complex64, c0: Complex64) -> Self {
        Self { psi0, c0 }
    }

    /// Probability left for the photon, `1 - |psi0|^2 - |c0|^2`.
    pub fn photon_weight(&self) -> f64 {
        1.0 - self.psi0.norm_sqr() - self.c0.norm_sqr()
    }

    /// Checks total probability against the packet's norm fraction.
    pub fn check_total(&self, packet: &PacketSpec) -> Result<()> {
        let total = self.psi0.norm_sqr() + self.c0.norm_sqr() + packet.norm_fraction();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(
                "initial",
                format!("|psi0|^2 + |c0|^2 + packet norm = {total}, expected 1"),
            ));
        }
        Ok(())
    }
}
