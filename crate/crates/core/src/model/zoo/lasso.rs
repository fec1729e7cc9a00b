use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::SimRng;
use crate::model::{Convexity, Domain, ExactSampler, NonsmoothKind, Potential, Smoothness};
use crate::special::{norm_cdf, sample_truncated_std, truncated_std_moments};

use super::separable::soft_threshold;

/// One-dimensional lasso posterior `φ(x) = (x − y)²/(2s²) + λ|x|`.
///
/// The density is a two-piece mixture of truncated normals: on `x ≥ 0` a
/// normal centred at `y − λs²`, on `x < 0` one centred at `y + λs²`.
#[derive(Debug, Clone)]
pub struct Lasso1d {
    y: f64,
    lambda: f64,
    noise: f64,
    /// Probability of the `x ≥ 0` piece.
    p_pos: f64,
    domain: Domain,
}

impl Lasso1d {
    pub fn new(y: f64, lambda: f64, noise: f64) -> Result<Self> {
        if !(lambda >= 0.0 && noise > 0.0 && y.is_finite()) {
            return Err(Error::invalid("lasso_1d needs finite y, lambda >= 0 and noise > 0"));
        }
        let s2 = noise * noise;
        let (a_pos, a_neg) = (y - lambda * s2, y + lambda * s2);
        let log_pos = (a_pos * a_pos - y * y) / (2.0 * s2) + norm_cdf(a_pos / noise).ln();
        let log_neg = (a_neg * a_neg - y * y) / (2.0 * s2) + norm_cdf(-a_neg / noise).ln();
        let p_pos = 1.0 / (1.0 + (log_neg - log_pos).exp());
        Ok(Self { y, lambda, noise, p_pos, domain: Domain::Full })
    }

    pub fn map(&self) -> f64 {
        soft_threshold(self.y, self.lambda * self.noise * self.noise)
    }

    pub fn mean(&self) -> f64 {
        let s = self.noise;
        let s2 = s * s;
        let (a_pos, a_neg) = (self.y - self.lambda * s2, self.y + self.lambda * s2);
        let (m_pos, _) = truncated_std_moments(-a_pos / s, f64::INFINITY);
        let (m_neg, _) = truncated_std_moments(f64::NEG_INFINITY, -a_neg / s);
        self.p_pos * (a_pos + s * m_pos) + (1.0 - self.p_pos) * (a_neg + s * m_neg)
    }
}

impl Potential for Lasso1d {
    fn dim(&self) -> usize {
        1
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::NonSmooth
    }
    fn convexity(&self) -> Convexity {
        let c = 1.0 / (self.noise * self.noise);
        Convexity { strong: c, lipschitz: c, strict: true }
    }
    fn value_in_domain(&self, x: &[f64]) -> f64 {
        self.smooth_value(x) + self.lambda * x[0].abs()
    }
    fn gradient_at(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x[0] == 0.0 && self.lambda > 0.0 {
            return Err(Error::NonSmoothPoint("x = 0 is the kink of λ|x|".into()));
        }
        self.smooth_gradient(x, out);
        out[0] += self.lambda * x[0].signum();
        Ok(())
    }
    fn min_norm_subgradient(&self, x: &[f64], out: &mut [f64]) {
        self.smooth_gradient(x, out);
        if x[0] != 0.0 {
            out[0] += self.lambda * x[0].signum();
        } else {
            // ∂φ(0) = f'(0) + [−λ, λ]
            out[0] = soft_threshold(out[0], self.lambda);
        }
    }
    fn hessian_vec(&self, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        if x[0] == 0.0 && self.lambda > 0.0 {
            return Err(Error::NonSmoothPoint("x = 0 is the kink of λ|x|".into()));
        }
        out[0] = v[0] / (self.noise * self.noise);
        Ok(())
    }
    fn has_hessian(&self) -> bool {
        true
    }
    fn prox_into(&self, u: &[f64], gamma: f64, out: &mut [f64]) -> Result<()> {
        let s2 = self.noise * self.noise;
        let w = 1.0 / (1.0 / s2 + 1.0 / gamma);
        let c = w * (self.y / s2 + u[0] / gamma);
        out[0] = soft_threshold(c, self.lambda * w);
        Ok(())
    }
    fn smooth_value(&self, x: &[f64]) -> f64 {
        (x[0] - self.y).powi(2) / (2.0 * self.noise * self.noise)
    }
    fn smooth_gradient(&self, x: &[f64], out: &mut [f64]) {
        out[0] = (x[0] - self.y) / (self.noise * self.noise);
    }
    fn nonsmooth_kind(&self) -> NonsmoothKind {
        NonsmoothKind::General
    }
    fn nonsmooth_value(&self, x: &[f64]) -> f64 {
        self.lambda * x[0].abs()
    }
    fn nonsmooth_prox(&self, u: &[f64], gamma: f64, out: &mut [f64]) -> Result<()> {
        out[0] = soft_threshold(u[0], gamma * self.lambda);
        Ok(())
    }
}

impl ExactSampler for Lasso1d {
    fn draw(&self, rng: &mut SimRng, out: &mut [f64]) {
        let s = self.noise;
        let s2 = s * s;
        let u: f64 = rng.random();
        out[0] = if u < self.p_pos {
            let a = self.y - self.lambda * s2;
            (a + s * sample_truncated_std(rng, -a / s, f64::INFINITY)).max(0.0)
        } else {
            let a = self.y + self.lambda * s2;
            (a + s * sample_truncated_std(rng, f64::NEG_INFINITY, -a / s)).min(0.0)
        };
    }
}
