//! Small numerical kernels shared by the physics modules.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

/// `(exp(z) - 1) / z`, accurate near `z = 0`.
pub fn exprel(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        // Taylor series; 20 terms reach machine precision for |z| < 0.5.
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for n in 2..=20 {
            term = term * z / n as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Values a finite-difference stencil can act on.
pub trait Sample: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}
impl<T> Sample for T where T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> {}

/// Derivative of uniformly sampled data on one contiguous run.
///
/// Fourth-order five-point stencils: central in the interior, offset near
/// the run ends. Shorter runs fall back to second order.
pub fn derivative<T: Sample>(f: &[T], h: f64) -> Vec<T> {
    let n = f.len();
    let mut out = Vec::with_capacity(n);
    match n {
        0 => {}
        1 => out.push(f[0] * 0.0),
        2 => {
            let d = (f[1] - f[0]) * (1.0 / h);
            out.extend([d, d]);
        }
        3 | 4 => {
            let s = 1.0 / (2.0 * h);
            out.push((f[1] * 4.0 - f[0] * 3.0 - f[2]) * s);
            for i in 1..n - 1 {
                out.push((f[i + 1] - f[i - 1]) * s);
            }
            out.push((f[n - 1] * 3.0 - f[n - 2] * 4.0 + f[n - 3]) * s);
        }
        _ => {
            let s = 1.0 / (12.0 * h);
            out.push((f[1] * 48.0 + f[3] * 16.0 - f[0] * 25.0 - f[2] * 36.0 - f[4] * 3.0) * s);
            out.push((f[2] * 18.0 + f[4] - f[0] * 3.0 - f[1] * 10.0 - f[3] * 6.0) * s);
            for i in 2..n - 2 {
                out.push((f[i - 2] + f[i + 1] * 8.0 - f[i - 1] * 8.0 - f[i + 2]) * s);
            }
            let m = n - 1;
            // mirror images of the two leading stencils
            out.push(
                (f[m - 2] * 18.0 + f[m - 4] - f[m] * 3.0 - f[m - 1] * 10.0 - f[m - 3] * 6.0) * (-s),
            );
            out.push(
                (f[m - 1] * 48.0 + f[m - 3] * 16.0
                    - f[m] * 25.0
                    - f[m - 2] * 36.0
                    - f[m - 4] * 3.0)
                    * (-s),
            );
        }
    }
    out
}

/// Derivative restricted to runs of `valid` samples; `None` elsewhere.
pub fn derivative_masked<T: Sample>(f: &[T], valid: &[bool], h: f64) -> Vec<Option<T>> {
    let mut out = vec![None; f.len()];
    let mut i = 0;
    while i < f.len() {
        if !valid[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < f.len() && valid[i] {
            i += 1;
        }
        if i - start >= 2 {
            for (k, d) in derivative(&f[start..i], h).into_iter().enumerate() {
                out[start + k] = Some(d);
            }
        }
    }
    out
}

/// Running trapezoid integral, starting at zero.
pub fn cumulative_trapezoid(f: &[f64], h: f64) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(f.len());
    if let Some(&first) = f.first() {
        out.push(0.0);
        let mut prev = first;
        for &v in &f[1..] {
            acc += 0.5 * h * (prev + v);
            out.push(acc);
            prev = v;
        }
    }
    out
}

/// Plain trapezoid integral of uniformly spaced samples.
pub fn trapezoid(f: &[f64], h: f64) -> f64 {
    match f.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (f[0] + f[n - 1]) + f[1..n - 1].iter().sum::<f64>()),
    }
}
