//! Small numerical kernels shared by the physics modules.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

/// Composite trapezoidal rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = values[1..n - 1].iter().sum();
            h * (interior + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

pub fn trapezoid_complex(values: &[Complex64], h: f64) -> Complex64 {
    match values.len() {
        0 | 1 => Complex64::new(0.0, 0.0),
        n => {
            let interior: Complex64 = values[1..n - 1].iter().sum();
            (interior + (values[0] + values[n - 1]) * 0.5) * h
        }
    }
}

/// Composite Simpson rule; `values.len()` must be odd and at least 3.
pub fn simpson_complex(values: &[Complex64], h: f64) -> Complex64 {
    let n = values.len();
    debug_assert!(n >= 3 && n % 2 == 1);
    let mut odd = Complex64::new(0.0, 0.0);
    let mut even = Complex64::new(0.0, 0.0);
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    (values[0] + values[n - 1] + odd * 4.0 + even * 2.0) * (h / 3.0)
}

/// Solves a tridiagonal system in place with the Thomas algorithm.
///
/// `lower[i]` multiplies `x[i - 1]` in row `i` (so `lower[0]` is ignored) and
/// `upper[i]` multiplies `x[i + 1]` (so `upper[n - 1]` is ignored). `rhs` is
/// overwritten with the solution; `scratch` must have the same length.
///
/// Returns the index of the row whose pivot vanished, if any.
pub fn solve_tridiagonal(
    lower: &[Complex64],
    diag: &[Complex64],
    upper: &[Complex64],
    rhs: &mut [Complex64],
    scratch: &mut [Complex64],
) -> Result<(), usize> {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n && scratch.len() == n);
    if n == 0 {
        return Ok(());
    }
    let tiny = 1e-300;
    let mut pivot = diag[0];
    if pivot.l1_norm() < tiny {
        return Err(0);
    }
    let mut inv = pivot.inv();
    scratch[0] = upper[0] * inv;
    rhs[0] *= inv;
    for i in 1..n {
        pivot = diag[i] - lower[i] * scratch[i - 1];
        if pivot.l1_norm() < tiny || !pivot.is_finite() {
            return Err(i);
        }
        inv = pivot.inv();
        scratch[i] = upper[i] * inv;
        let prev = rhs[i - 1];
        rhs[i] = (rhs[i] - lower[i] * prev) * inv;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= scratch[i] * next;
    }
    Ok(())
}

/// Central first difference at interior point `j`.
#[inline]
pub fn central_d1(f: &[f64], j: usize, h: f64) -> f64 {
    (f[j + 1] - f[j - 1]) / (2.0 * h)
}

/// Central second difference at interior point `j`.
#[inline]
pub fn central_d2(f: &[f64], j: usize, h: f64) -> f64 {
    (f[j + 1] - 2.0 * f[j] + f[j - 1]) / (h * h)
}

#[inline]
pub fn central_d1_complex(f: &[Complex64], j: usize, h: f64) -> Complex64 {
    (f[j + 1] - f[j - 1]) / (2.0 * h)
}

#[inline]
pub fn central_d2_complex(f: &[Complex64], j: usize, h: f64) -> Complex64 {
    (f[j + 1] - f[j] * 2.0 + f[j - 1]) / (h * h)
}

/// Relative L2 distance `‖a − b‖ / ‖b‖` between two sampled functions.
pub fn relative_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += (x - y).norm_sqr();
        den += y.norm_sqr();
    }
    (num / den).sqrt()
}

/// Phase unwrapping along a line: removes 2π jumps between neighbours.
pub fn unwrap_phase(raw: &[f64]) -> Vec<f64> {
    let two_pi = 2.0 * core::f64::consts::PI;
    let mut out = Vec::with_capacity(raw.len());
    let mut offset = 0.0;
    for (i, &p) in raw.iter().enumerate() {
        if i > 0 {
            let delta = p - raw[i - 1];
            offset -= two_pi * (delta / two_pi).round();
        }
        out.push(p + offset);
    }
    out
}

/// Classical fourth-order Runge–Kutta step for a fixed-size state vector.
pub fn rk4_step<const N: usize, F, E>(y: &[f64; N], t: f64, h: f64, mut f: F) -> Result<[f64; N], E>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    let k1 = f(t, y)?;
    let y2 = axpy(y, &k1, 0.5 * h);
    let k2 = f(t + 0.5 * h, &y2)?;
    let y3 = axpy(y, &k2, 0.5 * h);
    let k3 = f(t + 0.5 * h, &y3)?;
    let y4 = axpy(y, &k3, h);
    let k4 = f(t + h, &y4)?;
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], k: &[f64; N], s: f64) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += s * k[i];
    }
    out
}
