//! Potentials restricted to a box or the nonnegative orthant.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::exec::SimRng;
use crate::model::{Convexity, Domain, ExactSampler, Potential, Smoothness};
use crate::special::{increasing_root, sample_truncated_std};

/// Minimum-norm element of `∇f(x) + N_domain(x)` for box-like domains.
fn clip_normal_cone(domain: &Domain, x: &[f64], out: &mut [f64]) {
    for (i, q) in out.iter_mut().enumerate() {
        match domain.face(x, i) {
            -1 => *q = q.min(0.0),
            1 => *q = q.max(0.0),
            _ => {}
        }
    }
}

/// `φ(x) = rate·Σxᵢ + ι{x ≥ 0}`: i.i.d. exponential.
#[derive(Debug, Clone)]
pub struct ExponentialCone {
    n: usize,
    rate: f64,
    domain: Domain,
}

impl ExponentialCone {
    pub fn new(n: usize, rate: f64) -> Self {
        Self { n, rate, domain: Domain::Orthant }
    }
}

impl Potential for ExponentialCone {
    fn dim(&self) -> usize {
        self.n
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::C3
    }
    /// The smooth part is affine, so any positive step is admissible; `lipschitz = 0`.
    fn convexity(&self) -> Convexity {
        Convexity { strong: 0.0, lipschitz: 0.0, strict: false }
    }
    fn value_in_domain(&self, x: &[f64]) -> f64 {
        self.rate * x.iter().sum::<f64>()
    }
    fn gradient_at(&self, _x: &[f64], out: &mut [f64]) -> Result<()> {
        out.fill(self.rate);
        Ok(())
    }
    fn min_norm_subgradient(&self, x: &[f64], out: &mut [f64]) {
        out.fill(self.rate);
        clip_normal_cone(&self.domain, x, out);
    }
    fn hessian_vec(&self, _x: &[f64], _v: &[f64], out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        Ok(())
    }
    fn has_hessian(&self) -> bool {
        true
    }
    fn prox_into(&self, u: &[f64], gamma: f64, out: &mut [f64]) -> Result<()> {
        for (o, &v) in out.iter_mut().zip(u) {
            *o = (v - gamma * self.rate).max(0.0);
        }
        Ok(())
    }
    fn smooth_value(&self, x: &[f64]) -> f64 {
        self.value_in_domain(x)
    }
    fn smooth_gradient(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(self.rate);
    }
}

impl ExactSampler for ExponentialCone {
    fn draw(&self, rng: &mut SimRng, out: &mut [f64]) {
        for o in out.iter_mut() {
            let e: f64 = Exp1.sample(rng);
            *o = e / self.rate;
        }
    }
}

/// `φ(x) = Σ(xᵢ − μᵢ)²/(2σ²) + ι{lower ≤ x ≤ upper}`.
#[derive(Debug, Clone)]
pub struct TruncatedGaussianBox {
    mu: Vec<f64>,
    sigma: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    domain: Domain,
}

impl TruncatedGaussianBox {
    pub fn new(mu: Vec<f64>, sigma: f64, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = mu.len();
        if n == 0 || lower.len() != n || upper.len() != n {
            return Err(Error::invalid("mu, lower and upper must have equal non-zero length"));
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a < b)) {
            return Err(Error::invalid("box bounds must satisfy lower < upper"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma must be positive"));
        }
        let domain = Domain::Box { lower: lower.clone(), upper: upper.clone() };
        Ok(Self { mu, sigma, lower, upper, domain })
    }

    /// Standardised truncation bounds of coordinate `i`.
    pub(crate) fn std_bounds(&self, i: usize) -> (f64, f64) {
        (
            (self.lower[i] - self.mu[i]) / self.sigma,
            (self.upper[i] - self.mu[i]) / self.sigma,
        )
    }

    pub(crate) fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub(crate) fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Potential for TruncatedGaussianBox {
    fn dim(&self) -> usize {
        self.mu.len()
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::C3
    }
    fn convexity(&self) -> Convexity {
        let c = 1.0 / (self.sigma * self.sigma);
        Convexity { strong: c, lipschitz: c, strict: true }
    }
    fn value_in_domain(&self, x: &[f64]) -> f64 {
        self.smooth_value(x)
    }
    fn gradient_at(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.smooth_gradient(x, out);
        Ok(())
    }
    fn min_norm_subgradient(&self, x: &[f64], out: &mut [f64]) {
        self.smooth_gradient(x, out);
        clip_normal_cone(&self.domain, x, out);
    }
    fn hessian_vec(&self, _x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        let c = 1.0 / (self.sigma * self.sigma);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = c * vi;
        }
        Ok(())
    }
    fn has_hessian(&self) -> bool {
        true
    }
    fn prox_into(&self, u: &[f64], gamma: f64, out: &mut [f64]) -> Result<()> {
        let s2 = self.sigma * self.sigma;
        for i in 0..u.len() {
            let v = (u[i] * s2 + gamma * self.mu[i]) / (s2 + gamma);
            out[i] = v.clamp(self.lower[i], self.upper[i]);
        }
        Ok(())
    }
    fn smooth_value(&self, x: &[f64]) -> f64 {
        let s2 = self.sigma * self.sigma;
        x.iter().zip(&self.mu).map(|(a, m)| (a - m) * (a - m)).sum::<f64>() / (2.0 * s2)
    }
    fn smooth_gradient(&self, x: &[f64], out: &mut [f64]) {
        let s2 = self.sigma * self.sigma;
        for i in 0..x.len() {
            out[i] = (x[i] - self.mu[i]) / s2;
        }
    }
}

impl ExactSampler for TruncatedGaussianBox {
    fn draw(&self, rng: &mut SimRng, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (a, b) = self.std_bounds(i);
            *o = (self.mu[i] + self.sigma * sample_truncated_std(rng, a, b)).clamp(self.lower[i], self.upper[i]);
        }
    }
}

/// `φ(x) = Σe^{xᵢ} + ι{x ≥ 0}`.
#[derive(Debug, Clone)]
pub struct ExpOnCone {
    n: usize,
    domain: Domain,
}

impl ExpOnCone {
    pub fn new(n: usize) -> Self {
        Self { n, domain: Domain::Orthant }
    }
}

impl Potential for ExpOnCone {
    fn dim(&self) -> usize {
        self.n
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::C3
    }
    /// `∇²φ = diag(eˣ) ⪰ I` on the orthant.
    fn convexity(&self) -> Convexity {
        Convexity { strong: 1.0, lipschitz: f64::INFINITY, strict: true }
    }
    fn value_in_domain(&self, x: &[f64]) -> f64 {
        self.smooth_value(x)
    }
    fn gradient_at(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.smooth_gradient(x, out);
        Ok(())
    }
    fn min_norm_subgradient(&self, x: &[f64], out: &mut [f64]) {
        self.smooth_gradient(x, out);
        clip_normal_cone(&self.domain, x, out);
    }
    fn hessian_vec(&self, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        for i in 0..x.len() {
            out[i] = x[i].exp() * v[i];
        }
        Ok(())
    }
    fn has_hessian(&self) -> bool {
        true
    }
    fn prox_into(&self, u: &[f64], gamma: f64, out: &mut [f64]) -> Result<()> {
        // separable and 1-D convex: unconstrained root, then clip
        for (o, &ui) in out.iter_mut().zip(u) {
            let v = increasing_root(
                |v| {
                    let e = v.exp();
                    (gamma * e + v - ui, gamma * e + 1.0)
                },
                0.0_f64.min(ui),
                1e-13 * (1.0 + ui.abs()),
                200,
            )?;
            *o = v.max(0.0);
        }
        Ok(())
    }
    fn smooth_value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.exp()).sum()
    }
    fn smooth_gradient(&self, x: &[f64], out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = v.exp();
        }
    }
}

impl ExactSampler for ExpOnCone {
    /// `x = log t` with `t ∝ e^{-t}/t` on `[1, ∞)`: propose `t = 1 + Exp(1)`,
    /// accept with probability `1/t`.
    fn draw(&self, rng: &mut SimRng, out: &mut [f64]) {
        for o in out.iter_mut() {
            loop {
                let e: f64 = Exp1.sample(rng);
                let t = 1.0 + e;
                let u: f64 = rng.random();
                if u * t < 1.0 {
                    *o = t.ln();
                    break;
                }
            }
        }
    }
}
