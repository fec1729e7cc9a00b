//! Potentials `φ = -log p(x|y)` and the model zoo.
//!
//! A [`Potential`] bundles the oracles every other module needs: value,
//! gradient, minimum-norm subgradient, Hessian action, proximal map, domain and
//! convexity constants. It also declares a splitting `φ = f + g` into a smooth
//! part `f` and a prox-friendly part `g` (constraint indicator or a
//! non-differentiable penalty), which the MAP solver and the Moreau-smoothed
//! sampler consume.
//!
//! Values are extended reals: `f64::INFINITY` outside the domain, never a
//! large finite stand-in.

mod combinators;
mod domain;
mod params;
mod zoo;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::exec::SimRng;
use crate::linalg;

pub use combinators::{ScaledSum, Tilted};
pub use domain::{ConvexSet, Domain, DOMAIN_TOL};
pub use params::{ModelParams, ParamValue};
pub use zoo::{
    make_model, ExpLinear, ExpOnCone, ExponentialCone, Gaussian, LaplaceIid, Lasso1d, Quartic,
    TruncatedGaussianBox, MODEL_NAMES,
};

/// Regularity of `φ` on the interior of its domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    C3,
    C1,
    NonSmooth,
}

/// What the non-smooth part `g` of the splitting is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NonsmoothKind {
    /// `g = 0`.
    None,
    /// `g` is the indicator of the domain; its prox is the projection.
    Indicator,
    /// A general convex penalty with a proximal map.
    General,
}

/// Convexity constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Convexity {
    /// Strong-convexity modulus `m ≥ 0`.
    pub strong: f64,
    /// Lipschitz constant of `∇f` for the smooth part; `INFINITY` if unbounded.
    pub lipschitz: f64,
    /// Strictly convex (unique minimiser) even when `strong == 0`.
    pub strict: bool,
}

/// Oracle bundle for a convex potential.
///
/// Implementations may assume the dimension has already been checked; the free
/// functions [`eval`], [`grad`], [`subgrad`], [`prox`] and [`hessian_vec`] do
/// that and are the intended entry points.
pub trait Potential: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn domain(&self) -> &Domain;
    fn smoothness(&self) -> Smoothness;
    fn convexity(&self) -> Convexity;

    /// `φ(x)` for `x` inside the domain.
    fn value_in_domain(&self, x: &[f64]) -> f64;

    /// `∇φ(x)` at an interior point; [`Error::NonSmoothPoint`] at a kink.
    fn gradient_at(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    /// Minimum-norm element of `∂φ(x)` for `x` in the domain.
    fn min_norm_subgradient(&self, x: &[f64], out: &mut [f64]);

    /// `∇²φ(x) v`.
    fn hessian_vec(&self, _x: &[f64], _v: &[f64], _out: &mut [f64]) -> Result<()> {
        Err(Error::unsupported("no Hessian oracle for this potential"))
    }

    fn has_hessian(&self) -> bool {
        false
    }

    /// `prox_{γφ}(u)`. The default is the damped-Newton fallback, available for
    /// unconstrained smooth potentials with a Hessian oracle.
    fn prox_into(&self, u: &[f64], gamma: f64, out: &mut [f64]) -> Result<()> {
        newton_prox(self, u, gamma, out)
    }

    /// Smooth part `f` of the splitting `φ = f + g`, defined on all of `R^n`.
    fn smooth_value(&self, x: &[f64]) -> f64;

    fn smooth_gradient(&self, x: &[f64], out: &mut [f64]);

    fn nonsmooth_kind(&self) -> NonsmoothKind {
        if self.domain().is_full() {
            NonsmoothKind::None
        } else {
            NonsmoothKind::Indicator
        }
    }

    /// `g(x)`; for indicator splittings `0` inside and `INFINITY` outside.
    fn nonsmooth_value(&self, x: &[f64]) -> f64 {
        if self.domain().contains(x) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// `prox_{γg}(u)`; the projection for indicator splittings.
    fn nonsmooth_prox(&self, u: &[f64], _gamma: f64, out: &mut [f64]) -> Result<()> {
        self.domain().project(u, out);
        Ok(())
    }
}

/// Draws i.i.d. from the posterior in closed form.
pub trait ExactSampler: Send + Sync + fmt::Debug {
    fn draw(&self, rng: &mut SimRng, out: &mut [f64]);
}

/// Closed-form (or high-accuracy quadrature) reference quantities.
#[derive(Debug, Clone, Default, Serialize)]
pub struct References {
    pub map: Option<Vec<f64>>,
    pub mean: Option<Vec<f64>>,
    /// `E[φ(x)] − φ(x̂_MAP)`.
    pub expected_excess: Option<f64>,
    /// `E[∇f(x)]` for the smooth part; zero for smooth unconstrained models.
    pub score_mean: Option<Vec<f64>>,
    /// Minimiser over the domain of `φ(u) − uᵀE[∇f(x)]`.
    pub shifted_map: Option<Vec<f64>>,
}

/// A potential with its sampler recipe and reference quantities.
#[derive(Debug, Clone)]
pub struct ModelInstance {
    pub name: String,
    pub params: ModelParams,
    pub potential: Arc<dyn Potential>,
    /// `None` means the model requires MCMC.
    pub sampler: Option<Arc<dyn ExactSampler>>,
    pub references: References,
}

impl ModelInstance {
    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    pub fn is_constrained(&self) -> bool {
        !self.potential.domain().is_full()
    }

    /// The sampler, or [`Error::Unsupported`] if the model needs MCMC.
    pub fn exact_sampler(&self) -> Result<&Arc<dyn ExactSampler>> {
        self.sampler
            .as_ref()
            .ok_or_else(|| Error::unsupported(format!("model `{}` has no exact sampler", self.name)))
    }
}

/// `φ(x)`; `INFINITY` iff `x` is outside the domain.
pub fn eval(p: &dyn Potential, x: &[f64]) -> Result<f64> {
    check_dim(p.dim(), x.len())?;
    if !p.domain().contains(x) {
        return Ok(f64::INFINITY);
    }
    Ok(p.value_in_domain(x))
}

/// `∇φ(x)`. Boundary points of a constrained domain are non-smooth points.
pub fn grad(p: &dyn Potential, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(p.dim(), x.len())?;
    if !p.domain().contains(x) {
        return Err(Error::OutsideDomain);
    }
    if p.domain().on_boundary(x) {
        return Err(Error::NonSmoothPoint("boundary of the constraint set".into()));
    }
    let mut out = vec![0.0; x.len()];
    p.gradient_at(x, &mut out)?;
    Ok(out)
}

/// The minimum-norm subgradient; equals `∇φ(x)` where `φ` is smooth.
pub fn subgrad(p: &dyn Potential, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(p.dim(), x.len())?;
    if !p.domain().contains(x) {
        return Err(Error::OutsideDomain);
    }
    let mut out = vec![0.0; x.len()];
    p.min_norm_subgradient(x, &mut out);
    Ok(out)
}

/// `prox_{γφ}(u) = argmin_v φ(v) + ‖v − u‖²/(2γ)`.
pub fn prox(p: &dyn Potential, u: &[f64], gamma: f64) -> Result<Vec<f64>> {
    check_dim(p.dim(), u.len())?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("prox parameter must be positive, got {gamma}")));
    }
    let mut out = vec![0.0; u.len()];
    p.prox_into(u, gamma, &mut out)?;
    Ok(out)
}

pub fn hessian_vec(p: &dyn Potential, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    check_dim(p.dim(), x.len())?;
    check_dim(p.dim(), v.len())?;
    let mut out = vec![0.0; x.len()];
    p.hessian_vec(x, v, &mut out)?;
    Ok(out)
}

/// Dense Hessian assembled column by column from Hessian-vector products, then
/// symmetrised.
pub(crate) fn dense_hessian(p: &(impl Potential + ?Sized), x: &[f64]) -> Result<DMatrix<f64>> {
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        p.hessian_vec(x, &e, &mut col)?;
        e[j] = 0.0;
        for i in 0..n {
            h[(i, j)] = col[i];
        }
    }
    Ok((&h + h.transpose()) * 0.5)
}

const PROX_TOL: f64 = 1e-10;
const PROX_MAX_ITER: usize = 200;

/// Damped Newton on `v ↦ φ(v) + ‖v − u‖²/(2γ)`.
pub(crate) fn newton_prox(
    p: &(impl Potential + ?Sized),
    u: &[f64],
    gamma: f64,
    out: &mut [f64],
) -> Result<()> {
    if !p.domain().is_full() || p.smoothness() == Smoothness::NonSmooth || !p.has_hessian() {
        return Err(Error::unsupported(
            "no closed-form prox and the Newton fallback needs a smooth unconstrained potential with a Hessian",
        ));
    }
    let n = u.len();
    let objective = |v: &[f64]| {
        let d = linalg::dist(v, u);
        p.value_in_domain(v) + d * d / (2.0 * gamma)
    };
    let mut v = u.to_vec();
    let mut g = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..PROX_MAX_ITER {
        p.gradient_at(&v, &mut g)?;
        for i in 0..n {
            g[i] += (v[i] - u[i]) / gamma;
        }
        residual = linalg::norm(&g);
        if residual <= PROX_TOL {
            out.copy_from_slice(&v);
            return Ok(());
        }
        let mut h = dense_hessian(p, &v)?;
        for i in 0..n {
            h[(i, i)] += 1.0 / gamma;
        }
        let rhs = DVector::from_column_slice(&g);
        let dir = match h.cholesky() {
            Some(c) => -c.solve(&rhs),
            None => -rhs,
        };
        let f0 = objective(&v);
        let slope: f64 = dir.iter().zip(&g).map(|(d, gi)| d * gi).sum();
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = v.iter().zip(dir.iter()).map(|(a, d)| a + t * d).collect();
            let f1 = objective(&trial);
            if f1 <= f0 + 1e-4 * t * slope || t < 1e-12 {
                v = trial;
                break;
            }
            t *= 0.5;
        }
    }
    Err(Error::Convergence { iterations: PROX_MAX_ITER, residual })
}
