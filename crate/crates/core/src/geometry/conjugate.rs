//! Numerical Legendre transform `φ*(η) = sup_x xᵀη − φ(x)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::model::{self, dense_hessian, Potential, Smoothness, Tilted};
use crate::solver::{minimize, Method, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreBudget {
    pub max_iter: usize,
    /// Bound on `‖∇φ(x_η) − η‖` (or the prox residual without a Hessian).
    pub tol: f64,
}

impl Default for LegendreBudget {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-10 }
    }
}

/// The maximiser `x_η = ∇φ*(η)` together with `η` and `φ*(η)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub x: Vec<f64>,
    pub eta: Vec<f64>,
    pub conjugate: f64,
}

pub fn legendre(p: &dyn Potential, eta: &[f64], budget: LegendreBudget) -> Result<DualPoint> {
    let start = p.domain().center(p.dim());
    legendre_from(p, eta, &start, budget)
}

/// [`legendre`] warm-started at `start`.
pub fn legendre_from(p: &dyn Potential, eta: &[f64], start: &[f64], budget: LegendreBudget) -> Result<DualPoint> {
    check_dim(p.dim(), eta.len())?;
    check_dim(p.dim(), start.len())?;
    if eta.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("dual point must be finite"));
    }
    let x = if p.has_hessian() && p.domain().is_full() && p.smoothness() != Smoothness::NonSmooth {
        newton(p, eta, start, budget)?
    } else {
        first_order(p, eta, start, budget)?
    };
    let conjugate = linalg::dot(&x, eta) - model::eval(p, &x)?;
    Ok(DualPoint { x, eta: eta.to_vec(), conjugate })
}

/// Damped Newton on `h(x) = φ(x) − ηᵀx`.
fn newton(p: &dyn Potential, eta: &[f64], start: &[f64], budget: LegendreBudget) -> Result<Vec<f64>> {
    let n = eta.len();
    let h = |x: &[f64]| p.value_in_domain(x) - linalg::dot(eta, x);
    let mut x = start.to_vec();
    let mut r = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..budget.max_iter {
        p.gradient_at(&x, &mut r)?;
        linalg::axpy(-1.0, eta, &mut r);
        residual = linalg::norm(&r);
        if residual <= budget.tol {
            return Ok(x);
        }
        let step = newton_direction(dense_hessian(p, &x)?, &r);
        let slope = linalg::dot(&r, &step);
        let hx = h(&x);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a + t * d).collect();
            let ht = h(&trial);
            if ht <= hx + 1e-4 * t * slope || (ht - hx).abs() <= 1e-15 * hx.abs() {
                x = trial;
                break;
            }
            t *= 0.5;
            if t < 1e-20 {
                return Err(Error::Convergence { iterations: budget.max_iter, residual });
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            // η outside the gradient range: the supremum is not attained
            return Err(Error::Convergence { iterations: budget.max_iter, residual: f64::INFINITY });
        }
    }
    Err(Error::Convergence { iterations: budget.max_iter, residual })
}

/// Solves `H d = −r`, regularising `H` until it factorises.
fn newton_direction(mut hess: DMatrix<f64>, r: &[f64]) -> Vec<f64> {
    let rhs = -DVector::from_column_slice(r);
    let scale = hess.diagonal().abs().max().max(1.0);
    let mut shift = 0.0;
    loop {
        if let Some(chol) = hess.clone().cholesky() {
            return chol.solve(&rhs).as_slice().to_vec();
        }
        let bump = if shift == 0.0 { 1e-12 * scale } else { shift * 9.0 };
        for i in 0..hess.nrows() {
            hess[(i, i)] += bump;
        }
        shift += bump;
        if shift > 1e12 * scale {
            return rhs.as_slice().to_vec();
        }
    }
}

fn first_order(p: &dyn Potential, eta: &[f64], start: &[f64], budget: LegendreBudget) -> Result<Vec<f64>> {
    let tilted = Tilted::new(p, eta.to_vec())?;
    let config = SolverConfig {
        method: Method::Fista,
        max_iter: budget.max_iter.saturating_mul(50),
        tol: budget.tol,
        init: Some(start.to_vec()),
        ..SolverConfig::default()
    };
    let result = minimize(&tilted, &config)?;
    if !result.converged || !result.objective.is_finite() {
        return Err(Error::Convergence { iterations: result.iterations, residual: result.residual });
    }
    Ok(result.estimate)
}

/// `φ**(x) = sup_η ηᵀx − φ*(η)` by ascent on `η`; the ascent direction
/// `x − ∇φ*(η)` is preconditioned by the metric when one is available.
pub fn biconjugate(p: &dyn Potential, x: &[f64], budget: LegendreBudget) -> Result<f64> {
    check_dim(p.dim(), x.len())?;
    if !p.domain().contains(x) {
        return Err(Error::OutsideDomain);
    }
    let mut eta = vec![0.0; x.len()];
    p.min_norm_subgradient(x, &mut eta);
    let mut dual = legendre_from(p, &eta, x, budget)?;
    let objective = |d: &DualPoint| linalg::dot(&d.eta, x) - d.conjugate;
    let mut value = objective(&dual);
    let mut t = 1.0;
    for _ in 0..budget.max_iter {
        let gap = linalg::sub(x, &dual.x);
        if linalg::norm(&gap) <= 1e-9 * (1.0 + linalg::norm(x)) {
            break;
        }
        let direction = match metric_at(p, &dual.x) {
            Some(g) => (g * DVector::from_column_slice(&gap)).as_slice().to_vec(),
            None => gap,
        };
        let mut improved = false;
        while t > 1e-12 {
            let trial_eta: Vec<f64> = dual.eta.iter().zip(&direction).map(|(e, d)| e + t * d).collect();
            if let Ok(trial) = legendre_from(p, &trial_eta, &dual.x, budget) {
                let v = objective(&trial);
                if v >= value {
                    value = v;
                    dual = trial;
                    improved = true;
                    t = (2.0 * t).min(1.0);
                    break;
                }
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok(value)
}

fn metric_at(p: &dyn Potential, x: &[f64]) -> Option<DMatrix<f64>> {
    if p.has_hessian() && !p.domain().on_boundary(x) {
        dense_hessian(p, x).ok()
    } else {
        None
    }
}

/// `max |G*(η_x) g(x) − I|`, with `G*` the central-difference Jacobian of
/// `η ↦ ∇φ*(η)`. Default step `1e-4 (1 + ‖η‖)`.
pub fn dual_metric_check(p: &dyn Potential, x: &[f64], fd_step: Option<f64>, budget: LegendreBudget) -> Result<f64> {
    let g = super::metric(p, x)?;
    let eta = model::grad(p, x)?;
    let n = x.len();
    let h = fd_step.unwrap_or(1e-4 * (1.0 + linalg::norm(&eta)));
    if !(h > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let mut dual_metric = DMatrix::zeros(n, n);
    let mut probe = eta.clone();
    for j in 0..n {
        probe[j] = eta[j] + h;
        let plus = legendre_from(p, &probe, x, budget)?.x;
        probe[j] = eta[j] - h;
        let minus = legendre_from(p, &probe, x, budget)?.x;
        probe[j] = eta[j];
        for i in 0..n {
            dual_metric[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    let product = dual_metric * g - DMatrix::identity(n, n);
    Ok(product.abs().max())
}
