//! Normal-distribution helpers and scalar root finding.

use rand::Rng;
use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

pub fn norm_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

pub fn norm_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// `P(a ≤ Z ≤ b)` for a standard normal, computed on the side with less cancellation.
pub fn norm_mass(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        norm_cdf(-a) - norm_cdf(-b)
    } else {
        norm_cdf(b) - norm_cdf(a)
    }
}

/// Mean and variance of a standard normal truncated to `[a, b]`.
pub fn truncated_std_moments(a: f64, b: f64) -> (f64, f64) {
    let z = norm_mass(a, b);
    let (pa, pb) = (norm_pdf(a), norm_pdf(b));
    let mean = (pa - pb) / z;
    let ta = if a.is_finite() { a * pa } else { 0.0 };
    let tb = if b.is_finite() { b * pb } else { 0.0 };
    let var = 1.0 + (ta - tb) / z - mean * mean;
    (mean, var)
}

/// One draw of a standard normal truncated to `[a, b]` by inverse CDF,
/// mirrored so the quantile is always taken in the lower tail.
pub fn sample_truncated_std<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    if a > 0.0 {
        return -sample_truncated_std(rng, -b, -a);
    }
    let (pa, pb) = (norm_cdf(a), norm_cdf(b));
    let u: f64 = rng.random();
    let p = pa + u * (pb - pa);
    norm_quantile(p).clamp(a, b)
}

/// Root of a strictly increasing scalar function by Newton steps kept inside a
/// bisection bracket. `g` returns `(value, derivative)`.
pub fn increasing_root(
    mut g: impl FnMut(f64) -> (f64, f64),
    start: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let (mut lo, mut hi) = (start, start);
    let mut step = 1.0_f64.max(start.abs());
    let (g0, _) = g(start);
    if g0 == 0.0 {
        return Ok(start);
    }
    if g0 > 0.0 {
        while g(lo).0 > 0.0 {
            lo -= step;
            step *= 2.0;
            if !lo.is_finite() {
                return Err(Error::Convergence { iterations: 0, residual: g0.abs() });
            }
        }
    } else {
        while g(hi).0 < 0.0 {
            hi += step;
            step *= 2.0;
            if !hi.is_finite() {
                return Err(Error::Convergence { iterations: 0, residual: g0.abs() });
            }
        }
    }
    let mut x = start.clamp(lo, hi);
    let mut last = f64::INFINITY;
    for _ in 0..max_iter {
        let (v, d) = g(x);
        last = v.abs();
        if last <= tol {
            return Ok(x);
        }
        if v > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - v / d;
        x = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * (1.0 + x.abs()) {
            return Ok(x);
        }
    }
    Err(Error::Convergence { iterations: max_iter, residual: last })
}
