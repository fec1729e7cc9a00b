//! Unconstrained separable potentials: Laplace, quartic, `eˣ − x`.

use rand::RngCore;
use rand_distr::{Distribution, Exp1, Gamma};

use crate::error::{Error, Result};
use crate::exec::SimRng;
use crate::model::{Convexity, Domain, ExactSampler, NonsmoothKind, Potential, Smoothness};
use crate::special::increasing_root;

const SCALAR_TOL: f64 = 1e-13;

fn kink_error(i: usize) -> Error {
    Error::NonSmoothPoint(format!("coordinate {i} sits on the kink of |x|"))
}

/// `φ(x) = Σ|xᵢ|/b`: i.i.d. Laplace with scale `b`.
#[derive(Debug, Clone)]
pub struct LaplaceIid {
    n: usize,
    scale: f64,
    domain: Domain,
}

impl LaplaceIid {
    pub fn new(n: usize, scale: f64) -> Self {
        Self { n, scale, domain: Domain::Full }
    }
}

pub(crate) fn soft_threshold(u: f64, t: f64) -> f64 {
    if u > t {
        u - t
    } else if u < -t {
        u + t
    } else {
        0.0
    }
}

impl Potential for LaplaceIid {
    fn dim(&self) -> usize {
        self.n
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::NonSmooth
    }
    fn convexity(&self) -> Convexity {
        Convexity { strong: 0.0, lipschitz: 0.0, strict: false }
    }
    fn value_in_domain(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.abs()).sum::<f64>() / self.scale
    }
    fn gradient_at(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        for (i, (o, &v)) in out.iter_mut().zip(x).enumerate() {
            if v == 0.0 {
                return Err(kink_error(i));
            }
            *o = v.signum() / self.scale;
        }
        Ok(())
    }
    fn min_norm_subgradient(&self, x: &[f64], out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = if v == 0.0 { 0.0 } else { v.signum() / self.scale };
        }
    }
    fn hessian_vec(&self, x: &[f64], _v: &[f64], out: &mut [f64]) -> Result<()> {
        if let Some(i) = x.iter().position(|&v| v == 0.0) {
            return Err(kink_error(i));
        }
        out.fill(0.0);
        Ok(())
    }
    fn has_hessian(&self) -> bool {
        true
    }
    fn prox_into(&self, u: &[f64], gamma: f64, out: &mut [f64]) -> Result<()> {
        let t = gamma / self.scale;
        for (o, &v) in out.iter_mut().zip(u) {
            *o = soft_threshold(v, t);
        }
        Ok(())
    }
    fn smooth_value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn smooth_gradient(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn nonsmooth_kind(&self) -> NonsmoothKind {
        NonsmoothKind::General
    }
    fn nonsmooth_value(&self, x: &[f64]) -> f64 {
        self.value_in_domain(x)
    }
    fn nonsmooth_prox(&self, u: &[f64], gamma: f64, out: &mut [f64]) -> Result<()> {
        self.prox_into(u, gamma, out)
    }
}

impl ExactSampler for LaplaceIid {
    fn draw(&self, rng: &mut SimRng, out: &mut [f64]) {
        let mut bits = 0u64;
        for (i, o) in out.iter_mut().enumerate() {
            if i % 64 == 0 {
                bits = rng.next_u64();
            }
            let e: f64 = Exp1.sample(rng);
            let sign = if (bits >> (i % 64)) & 1 == 1 { 1.0 } else { -1.0 };
            *o = sign * self.scale * e;
        }
    }
}

/// `φ(x) = Σxᵢ⁴`.
#[derive(Debug, Clone)]
pub struct Quartic {
    n: usize,
    gamma: Gamma<f64>,
    domain: Domain,
}

impl Quartic {
    pub fn new(n: usize) -> Self {
        Self { n, gamma: Gamma::new(0.25, 1.0).expect("valid gamma"), domain: Domain::Full }
    }
}

impl Potential for Quartic {
    fn dim(&self) -> usize {
        self.n
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::C3
    }
    fn convexity(&self) -> Convexity {
        Convexity { strong: 0.0, lipschitz: f64::INFINITY, strict: true }
    }
    fn value_in_domain(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.powi(4)).sum()
    }
    fn gradient_at(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.smooth_gradient(x, out);
        Ok(())
    }
    fn min_norm_subgradient(&self, x: &[f64], out: &mut [f64]) {
        self.smooth_gradient(x, out);
    }
    fn hessian_vec(&self, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        for i in 0..x.len() {
            out[i] = 12.0 * x[i] * x[i] * v[i];
        }
        Ok(())
    }
    fn has_hessian(&self) -> bool {
        true
    }
    fn prox_into(&self, u: &[f64], gamma: f64, out: &mut [f64]) -> Result<()> {
        for (o, &ui) in out.iter_mut().zip(u) {
            *o = increasing_root(
                |v| (4.0 * gamma * v * v * v + v - ui, 12.0 * gamma * v * v + 1.0),
                ui,
                SCALAR_TOL * (1.0 + ui.abs()),
                200,
            )?;
        }
        Ok(())
    }
    fn smooth_value(&self, x: &[f64]) -> f64 {
        self.value_in_domain(x)
    }
    fn smooth_gradient(&self, x: &[f64], out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = 4.0 * v * v * v;
        }
    }
}

impl ExactSampler for Quartic {
    /// `|x|⁴ ~ Gamma(1/4, 1)` with an independent random sign.
    fn draw(&self, rng: &mut SimRng, out: &mut [f64]) {
        for o in out.iter_mut() {
            let g: f64 = self.gamma.sample(rng);
            let sign = if rng.next_u32() & 1 == 1 { 1.0 } else { -1.0 };
            *o = sign * g.powf(0.25);
        }
    }
}

/// `φ(x) = Σ(e^{xᵢ} − xᵢ)`; the posterior of `log t` for `t ~ Exp(1)`.
#[derive(Debug, Clone)]
pub struct ExpLinear {
    n: usize,
    domain: Domain,
}

impl ExpLinear {
    pub fn new(n: usize) -> Self {
        Self { n, domain: Domain::Full }
    }
}

impl Potential for ExpLinear {
    fn dim(&self) -> usize {
        self.n
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::C3
    }
    fn convexity(&self) -> Convexity {
        Convexity { strong: 0.0, lipschitz: f64::INFINITY, strict: true }
    }
    fn value_in_domain(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.exp() - v).sum()
    }
    fn gradient_at(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.smooth_gradient(x, out);
        Ok(())
    }
    fn min_norm_subgradient(&self, x: &[f64], out: &mut [f64]) {
        self.smooth_gradient(x, out);
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
        for (o, &ui) in out.iter_mut().zip(u) {
            *o = increasing_root(
                |v| {
                    let e = v.exp();
                    (gamma * (e - 1.0) + v - ui, gamma * e + 1.0)
                },
                0.0_f64.min(ui),
                SCALAR_TOL * (1.0 + ui.abs()),
                200,
            )?;
        }
        Ok(())
    }
    fn smooth_value(&self, x: &[f64]) -> f64 {
        self.value_in_domain(x)
    }
    fn smooth_gradient(&self, x: &[f64], out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = v.exp() - 1.0;
        }
    }
}

impl ExactSampler for ExpLinear {
    fn draw(&self, rng: &mut SimRng, out: &mut [f64]) {
        for o in out.iter_mut() {
            let t: f64 = Exp1.sample(rng);
            *o = t.ln();
        }
    }
}
