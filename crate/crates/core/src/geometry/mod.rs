//! Divergences of the dually flat geometry induced by a potential.
//!
//! The Hessian `g = ∇²φ` is a Riemannian metric; primal coordinates `x` and
//! dual coordinates `η = ∇φ(x)` are both affine. The canonical divergence of
//! that manifold, integrated along the straight-line geodesic, is the Bregman
//! divergence of `φ`.

mod conjugate;

use log::warn;
use nalgebra::DMatrix;
use serde::Serialize;

pub use conjugate::{biconjugate, dual_metric_check, legendre, legendre_from, DualPoint, LegendreBudget};

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::model::{self, dense_hessian, Potential, Smoothness};
use crate::quadrature::GaussLegendre;

/// Default Gauss–Legendre order for [`canonical_numeric`].
pub const DEFAULT_QUAD_ORDER: usize = 30;

/// Which divergence a value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceForm {
    BregmanPrimal,
    BregmanDual,
    GeneralizedDual,
    CanonicalNumeric,
}

impl DivergenceForm {
    pub fn as_str(self) -> &'static str {
        match self {
            DivergenceForm::BregmanPrimal => "bregman_primal",
            DivergenceForm::BregmanDual => "bregman_dual",
            DivergenceForm::GeneralizedDual => "generalized_dual",
            DivergenceForm::CanonicalNumeric => "canonical_numeric",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceValue {
    pub value: f64,
    pub form: DivergenceForm,
    /// The (sub)gradient used in the linear term.
    pub q: Option<Vec<f64>>,
}

/// Values of order `1e-12` relative below zero are rounding, not non-convexity.
fn clamp_rounding(v: f64, scale: f64) -> f64 {
    if v < 0.0 && v > -1e-12 * (1.0 + scale) {
        0.0
    } else {
        v
    }
}

fn in_domain_value(p: &dyn Potential, x: &[f64]) -> Result<f64> {
    let v = model::eval(p, x)?;
    if v.is_infinite() {
        return Err(Error::OutsideDomain);
    }
    Ok(v)
}

/// `D_φ(u, x) = φ(u) − φ(x) − ∇φ(x)ᵀ(u − x)`.
pub fn bregman(p: &dyn Potential, u: &[f64], x: &[f64]) -> Result<DivergenceValue> {
    check_dim(p.dim(), u.len())?;
    let fu = in_domain_value(p, u)?;
    let fx = in_domain_value(p, x)?;
    let g = model::grad(p, x).map_err(|e| match e {
        Error::NonSmoothPoint(why) => Error::NonSmoothPoint(format!(
            "{why}; use generalized_dual with an explicit subgradient"
        )),
        other => other,
    })?;
    let d = linalg::sub(u, x);
    let value = clamp_rounding(fu - fx - linalg::dot(&g, &d), fu.abs() + fx.abs());
    Ok(DivergenceValue { value, form: DivergenceForm::BregmanPrimal, q: Some(g) })
}

/// `D*_φ(u, x) = D_φ(x, u)`.
pub fn dual_bregman(p: &dyn Potential, u: &[f64], x: &[f64]) -> Result<DivergenceValue> {
    let mut v = bregman(p, x, u)?;
    v.form = DivergenceForm::BregmanDual;
    Ok(v)
}

/// `D*_{φ,q}(s, x) = φ(x) − φ(s) − qᵀ(x − s)` for `q ∈ ∂φ(s)`.
///
/// Membership of `q` in the subdifferential is probed with the subgradient
/// inequality along the coordinate axes and towards `x`; a violation logs a
/// warning but does not fail.
pub fn generalized_dual(p: &dyn Potential, s: &[f64], x: &[f64], q: &[f64]) -> Result<DivergenceValue> {
    check_dim(p.dim(), q.len())?;
    let fs = in_domain_value(p, s)?;
    let fx = in_domain_value(p, x)?;
    if !subgradient_plausible(p, s, fs, q, x) {
        warn!("generalized_dual: q fails the subgradient inequality at s");
    }
    let d = linalg::sub(x, s);
    let value = clamp_rounding(fx - fs - linalg::dot(q, &d), fs.abs() + fx.abs());
    Ok(DivergenceValue { value, form: DivergenceForm::GeneralizedDual, q: Some(q.to_vec()) })
}

fn subgradient_plausible(p: &dyn Potential, s: &[f64], fs: f64, q: &[f64], x: &[f64]) -> bool {
    let n = s.len();
    let h = 1e-3 * (1.0 + linalg::norm(s));
    let mut z = s.to_vec();
    let holds = |z: &[f64]| {
        let fz = model::eval(p, z).unwrap_or(f64::INFINITY);
        let lin = fs + linalg::dot(q, &linalg::sub(z, s));
        fz >= lin - 1e-9 * (1.0 + fz.abs().min(1e300))
    };
    for i in 0..n {
        for sign in [1.0, -1.0] {
            z[i] = s[i] + sign * h;
            if !holds(&z) {
                return false;
            }
            z[i] = s[i];
        }
    }
    holds(x)
}

/// Gauss–Legendre evaluation of `∫₀¹ t γ̇ᵀ g(γ_t) γ̇ dt` along `γ_t = u + t(x − u)`.
pub fn canonical_numeric(p: &dyn Potential, u: &[f64], x: &[f64], quad_order: usize) -> Result<DivergenceValue> {
    check_dim(p.dim(), u.len())?;
    check_dim(p.dim(), x.len())?;
    if quad_order == 0 {
        return Err(Error::invalid("quadrature order must be positive"));
    }
    if !p.has_hessian() {
        return Err(Error::unsupported("canonical divergence needs a Hessian oracle"));
    }
    if p.smoothness() == Smoothness::NonSmooth {
        return Err(Error::NonSmoothPoint("canonical divergence needs a C3 potential".into()));
    }
    in_domain_value(p, u)?;
    in_domain_value(p, x)?;
    let velocity = linalg::sub(x, u);
    let rule = GaussLegendre::new(quad_order);
    let mut hv = vec![0.0; u.len()];
    let mut total = 0.0;
    for (t, w) in rule.mapped(0.0, 1.0) {
        let point = linalg::lerp(u, x, t);
        p.hessian_vec(&point, &velocity, &mut hv)?;
        total += w * t * linalg::dot(&velocity, &hv);
    }
    Ok(DivergenceValue { value: total, form: DivergenceForm::CanonicalNumeric, q: None })
}

/// [`canonical_numeric`] plus the order-doubling residual `|Q_k − Q_{2k}|`.
pub fn canonical_numeric_checked(
    p: &dyn Potential,
    u: &[f64],
    x: &[f64],
    quad_order: usize,
) -> Result<(DivergenceValue, f64)> {
    let coarse = canonical_numeric(p, u, x, quad_order)?;
    let fine = canonical_numeric(p, u, x, 2 * quad_order)?;
    let residual = (coarse.value - fine.value).abs();
    Ok((coarse, residual))
}

/// `D_φ(u, x)` through the conjugate: `φ(u) + φ*(η_x) − uᵀη_x` with `φ*`
/// evaluated by the numerical Legendre transform.
pub fn bregman_via_conjugate(p: &dyn Potential, u: &[f64], x: &[f64], budget: LegendreBudget) -> Result<f64> {
    let fu = in_domain_value(p, u)?;
    let eta = model::grad(p, x)?;
    let dual = legendre(p, &eta, budget)?;
    Ok(fu + dual.conjugate - linalg::dot(u, &eta))
}

/// The metric `g(x) = ∇²φ(x)` as a dense symmetric matrix.
pub fn metric(p: &dyn Potential, x: &[f64]) -> Result<DMatrix<f64>> {
    check_dim(p.dim(), x.len())?;
    if !p.domain().contains(x) {
        return Err(Error::OutsideDomain);
    }
    if p.domain().on_boundary(x) {
        return Err(Error::NonSmoothPoint("metric is undefined on the constraint boundary".into()));
    }
    if !p.has_hessian() {
        return Err(Error::unsupported("no Hessian oracle for this potential"));
    }
    dense_hessian(p, x)
}
