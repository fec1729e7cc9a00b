//! The two argmin identities: the primal Bayes estimator is the MAP point,
//! the dual one is the posterior mean.

use serde::{Deserialize, Serialize};

use super::{
    map_point, mean_moments, score_moments, three_se, AuditConfig, AuditReport, STREAM_MEAN, STREAM_MEAN_CHECK,
};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{self, ModelInstance, Potential, Smoothness, Tilted};
use crate::solver::{minimize, SolverConfig};

/// Solver tolerance added to every argmin slack.
const SOLVER_SLACK: f64 = 1e-6;

/// How the outer minimisation over `u` is carried out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgminMethod {
    #[default]
    Solver,
    /// Exhaustive grid; `n ≤ 2` only, for cross-validating the solver.
    Grid,
}

/// `argmin_u E[D_φ(u, x)]` through the reduced objective `φ(u) − uᵀĝ` with
/// `ĝ` the Monte Carlo estimate of `E[∇φ(x)]`, compared with the MAP point.
///
/// The slack pushes `ĝ ± 3 se_i e_i` through the argmin map coordinate by
/// coordinate, which stays valid where the map is not differentiable at `ĝ`
/// (the cube root of the quartic model).
pub fn bayes_argmin_primal(model: &ModelInstance, config: &AuditConfig, method: ArgminMethod) -> Result<AuditReport> {
    if model.is_constrained() {
        return Err(Error::unsupported(format!(
            "model `{}` is constrained; use shifted_map for the primal estimator",
            model.name
        )));
    }
    if model.potential.smoothness() == Smoothness::NonSmooth {
        return Err(Error::unsupported("the primal Bayes estimator needs a differentiable potential"));
    }
    let n = model.dim();
    let score = score_moments(model, config)?;
    let spread = three_se(&score);
    let grid = match method {
        ArgminMethod::Solver => None,
        ArgminMethod::Grid => {
            if n > 2 {
                return Err(Error::invalid("grid search is limited to n ≤ 2"));
            }
            let moments = mean_moments(model, config, STREAM_MEAN)?;
            Some(Grid::around(&moments.mean, &moments.variance()))
        }
    };
    let argmin = |shift: &[f64]| -> Result<Vec<f64>> {
        match &grid {
            None => reduced_argmin(&*model.potential, shift, None),
            Some(g) => Ok(g.argmin(&*model.potential, shift)),
        }
    };

    let estimate = argmin(&score.mean)?;
    let mut propagated = 0.0;
    let mut shifted = score.mean.clone();
    for i in 0..n {
        let mut worst: f64 = 0.0;
        for sign in [-1.0, 1.0] {
            shifted[i] = score.mean[i] + sign * spread[i];
            worst = worst.max(linalg::dist(&argmin(&shifted)?, &estimate));
        }
        shifted[i] = score.mean[i];
        propagated += worst * worst;
    }
    let mut slack = propagated.sqrt() + SOLVER_SLACK;
    if let Some(g) = &grid {
        slack += g.resolution();
    }
    let map = map_point(model)?;
    let mut report = AuditReport::point_equality("bayes_argmin_primal", model, config, &estimate, &map, slack);
    report.extra("score", &score.mean);
    report.extra("score_se", &score.std_error());
    Ok(report)
}

/// Minimiser of `φ(u) − shiftᵀu` over the domain.
pub(super) fn reduced_argmin(p: &dyn Potential, shift: &[f64], init: Option<Vec<f64>>) -> Result<Vec<f64>> {
    let tilted = Tilted::new(p, shift.to_vec())?;
    let config = SolverConfig { init, max_iter: 100_000, tol: 1e-11, ..SolverConfig::default() };
    let r = minimize(&tilted, &config)?;
    if !r.converged || r.estimate.iter().any(|v| !v.is_finite()) {
        return Err(Error::Convergence { iterations: r.iterations, residual: r.residual });
    }
    Ok(r.estimate)
}

struct Grid {
    axes: Vec<Vec<f64>>,
    step: Vec<f64>,
}

impl Grid {
    /// Mean ± 6 posterior standard deviations, 0.002 sd apart in 1-D and
    /// 0.05 sd in 2-D.
    fn around(mean: &[f64], variance: &[f64]) -> Self {
        let points = if mean.len() == 1 { 6001 } else { 241 };
        let mut axes = Vec::new();
        let mut step = Vec::new();
        for (m, v) in mean.iter().zip(variance) {
            let half = 6.0 * v.sqrt().max(1e-6);
            let h = 2.0 * half / (points - 1) as f64;
            axes.push((0..points).map(|k| m - half + k as f64 * h).collect());
            step.push(h);
        }
        Self { axes, step }
    }

    /// Worst-case distance from any point to the nearest grid node.
    fn resolution(&self) -> f64 {
        0.5 * self.step.iter().map(|h| h * h).sum::<f64>().sqrt()
    }

    fn argmin(&self, p: &dyn Potential, shift: &[f64]) -> Vec<f64> {
        let objective = |u: &[f64]| model::eval(p, u).unwrap_or(f64::INFINITY) - linalg::dot(shift, u);
        let mut best = (f64::INFINITY, vec![0.0; self.axes.len()]);
        let mut u = vec![0.0; self.axes.len()];
        let mut visit = |u: &[f64]| {
            let v = objective(u);
            if v < best.0 {
                best = (v, u.to_vec());
            }
        };
        match self.axes.as_slice() {
            [a] => a.iter().for_each(|&x| visit(&[x])),
            [a, b] => {
                for &x in a {
                    for &y in b {
                        u[0] = x;
                        u[1] = y;
                        visit(&u);
                    }
                }
            }
            _ => unreachable!("grid dimension checked by the caller"),
        }
        best.1
    }
}

/// `argmin_u E[D_φ(x, u)]`, compared with an independent Monte Carlo
/// posterior mean.
///
/// With `x̄` the sample mean, the objective is `J(u) = −φ(u) − ∇φ(u)ᵀ(x̄ − u)`
/// up to a constant. Its gradient is `−g(u)(x̄ − u)`, so `x̄ − u` is the
/// natural-gradient direction in the Hessian metric; steps are damped until
/// `J` decreases sufficiently. A flat objective (linear potential) is
/// reported as degenerate.
pub fn bayes_argmin_dual(model: &ModelInstance, config: &AuditConfig) -> Result<AuditReport> {
    let p = &*model.potential;
    if p.smoothness() == Smoothness::NonSmooth {
        return Err(Error::unsupported("the dual Bayes estimator needs a differentiable potential"));
    }
    let n = model.dim();
    let sample = mean_moments(model, config, STREAM_MEAN)?;
    let check = mean_moments(model, config, STREAM_MEAN_CHECK)?;
    let target = &sample.mean;

    let objective = |u: &[f64]| -> f64 {
        let fu = model::eval(p, u).unwrap_or(f64::INFINITY);
        if !fu.is_finite() {
            return f64::INFINITY;
        }
        let mut g = vec![0.0; n];
        p.smooth_gradient(u, &mut g);
        -fu - linalg::dot(&g, &linalg::sub(target, u))
    };
    let mut u = vec![0.0; n];
    p.domain().project(&p.domain().center(n), &mut u);
    let start_value = objective(&u);
    let mut hv = vec![0.0; n];
    let mut iterations = 0;
    while iterations < 200 {
        let d = linalg::sub(target, &u);
        if linalg::norm(&d) <= 1e-13 * (1.0 + linalg::norm(&u)) {
            break;
        }
        let curvature = if p.has_hessian() && p.hessian_vec(&u, &d, &mut hv).is_ok() {
            linalg::dot(&d, &hv)
        } else {
            0.0
        };
        let ju = objective(&u);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            if objective(&trial) <= ju - 1e-4 * t * curvature {
                u = trial;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::Convergence { iterations, residual: linalg::norm(&d) });
            }
        }
        iterations += 1;
    }
    let end_value = objective(&u);
    let flat = (start_value - end_value).abs() <= 1e-12 * (1.0 + end_value.abs());

    let se_a = sample.std_error();
    let se_b = check.std_error();
    let combined: f64 = se_a.iter().zip(&se_b).map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
    let slack = 3.0 * combined + SOLVER_SLACK;
    let mut report = AuditReport::point_equality("bayes_argmin_dual", model, config, &u, &check.mean, slack);
    report.degenerate = flat;
    report.extra("sample_mean", target);
    if let Some(mean) = &model.references.mean {
        report.extra("analytic_mean", mean);
    }
    Ok(report)
}
