//! First-order MAP solvers on the splitting `φ = f + g`.
//!
//! All methods share one backtracking proximal-gradient step: with step `t`,
//! `T_t(x) = prox_{t g}(x − t ∇f(x))`. Convergence is measured by the
//! fixed-point residual `‖x − T_t(x)‖ / t`, which is zero exactly when
//! `0 ∈ ∂φ(x)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::model::{self, ModelInstance, NonsmoothKind, Potential};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Gradient,
    ProximalGradient,
    Fista,
    ProjectedGradient,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Gradient => "gradient",
            Method::ProximalGradient => "proximal_gradient",
            Method::Fista => "fista",
            Method::ProjectedGradient => "projected_gradient",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient" => Ok(Method::Gradient),
            "proximal_gradient" => Ok(Method::ProximalGradient),
            "fista" => Ok(Method::Fista),
            "projected_gradient" => Ok(Method::ProjectedGradient),
            other => Err(Error::invalid(format!("unknown solver method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSize {
    /// `1/L` when the smooth part has a finite positive Lipschitz constant,
    /// otherwise backtracking from `1.0`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub step: StepSize,
    pub max_iter: usize,
    pub tol: f64,
    /// Reserved for random restarts; unused.
    pub seed: u64,
    /// Starting point; defaults to the domain centre or the origin.
    pub init: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Fista,
            step: StepSize::Auto,
            max_iter: 10_000,
            tol: 1e-10,
            seed: 0,
            init: None,
        }
    }
}

impl SolverConfig {
    pub fn with_method(method: Method) -> Self {
        Self { method, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverResult {
    pub estimate: Vec<f64>,
    pub objective: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The potential is not strictly convex: the estimate is one point of a
    /// possibly larger argmin set.
    pub non_unique: bool,
    /// Final step size `t`.
    pub step: f64,
    /// `φ(x_k)` for every iterate, starting with the initial point.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

/// `x̂_MAP` for a zoo model.
pub fn solve_map(model: &ModelInstance, config: &SolverConfig) -> Result<SolverResult> {
    minimize(&*model.potential, config)
}

/// Prox-gradient fixed-point residual `‖x − prox_{γg}(x − γ∇f(x))‖ / γ`.
pub fn certify_optimality(p: &dyn Potential, x: &[f64], gamma: f64) -> Result<f64> {
    check_dim(p.dim(), x.len())?;
    if !p.domain().contains(x) {
        return Err(Error::OutsideDomain);
    }
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma must be positive"));
    }
    let mut g = vec![0.0; x.len()];
    let mut z = vec![0.0; x.len()];
    p.smooth_gradient(x, &mut g);
    forward_backward(p, x, &g, gamma, &mut z)?;
    Ok(linalg::dist(x, &z) / gamma)
}

fn forward_backward(p: &dyn Potential, x: &[f64], g: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
    let moved: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - t * b).collect();
    p.nonsmooth_prox(&moved, t, out)
}

struct Stepper {
    t: f64,
    backtrack: bool,
}

impl Stepper {
    /// One forward-backward step from `x` with sufficient-decrease backtracking.
    fn step(&mut self, p: &dyn Potential, x: &[f64], g: &[f64], out: &mut [f64]) -> Result<()> {
        let fx = p.smooth_value(x);
        loop {
            forward_backward(p, x, g, self.t, out)?;
            if !self.backtrack {
                return Ok(());
            }
            let d = linalg::sub(out, x);
            let bound = fx + linalg::dot(g, &d) + linalg::dot(&d, &d) / (2.0 * self.t);
            let fz = p.smooth_value(out);
            if fz <= bound + 1e-14 * fx.abs() {
                return Ok(());
            }
            self.t *= 0.5;
            if self.t < 1e-30 {
                return Err(Error::Convergence { iterations: 0, residual: f64::INFINITY });
            }
        }
    }
}

/// Minimises any potential with the configured first-order method.
pub fn minimize(p: &dyn Potential, config: &SolverConfig) -> Result<SolverResult> {
    let n = p.dim();
    if !(config.tol > 0.0) {
        return Err(Error::invalid("solver tolerance must be positive"));
    }
    let kind = p.nonsmooth_kind();
    match (config.method, kind) {
        (Method::Gradient, NonsmoothKind::None) => {}
        (Method::Gradient, _) => {
            return Err(Error::unsupported("gradient descent needs a smooth unconstrained potential"))
        }
        (Method::ProjectedGradient, NonsmoothKind::General) => {
            return Err(Error::unsupported(
                "projected gradient needs a smooth potential with at most a constraint indicator",
            ))
        }
        _ => {}
    }
    let lipschitz = p.convexity().lipschitz;
    let known_l = lipschitz > 0.0 && lipschitz.is_finite();
    let mut stepper = match config.step {
        StepSize::Fixed(t) => {
            if !(t > 0.0) || (known_l && t >= 2.0 / lipschitz) {
                return Err(Error::invalid(format!("step {t} must lie in (0, 2/L) with L = {lipschitz}")));
            }
            Stepper { t, backtrack: false }
        }
        StepSize::Auto if known_l => Stepper { t: 1.0 / lipschitz, backtrack: false },
        StepSize::Auto => Stepper { t: 1.0, backtrack: true },
    };

    let mut x = match &config.init {
        Some(v) => {
            check_dim(n, v.len())?;
            v.clone()
        }
        None => p.domain().center(n),
    };
    if kind == NonsmoothKind::Indicator && !p.domain().contains(&x) {
        let mut y = vec![0.0; n];
        p.domain().project(&x, &mut y);
        x = y;
    }

    let objective = |v: &[f64]| model::eval(p, v).unwrap_or(f64::INFINITY);
    let mut trace = vec![objective(&x)];
    let mut g = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    match config.method {
        Method::Gradient | Method::ProximalGradient | Method::ProjectedGradient => {
            while iterations < config.max_iter {
                p.smooth_gradient(&x, &mut g);
                stepper.step(p, &x, &g, &mut z)?;
                residual = linalg::dist(&x, &z) / stepper.t;
                if residual <= config.tol {
                    converged = true;
                    break;
                }
                std::mem::swap(&mut x, &mut z);
                iterations += 1;
                trace.push(objective(&x));
            }
        }
        Method::Fista => {
            let mut y = x.clone();
            let mut theta = 1.0_f64;
            let mut probe = vec![0.0; n];
            while iterations < config.max_iter {
                // residual at the current iterate
                p.smooth_gradient(&x, &mut g);
                stepper.step(p, &x, &g, &mut probe)?;
                residual = linalg::dist(&x, &probe) / stepper.t;
                if residual <= config.tol {
                    converged = true;
                    break;
                }
                p.smooth_gradient(&y, &mut g);
                stepper.step(p, &y, &g, &mut z)?;
                let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
                let beta = (theta - 1.0) / theta_next;
                for i in 0..n {
                    y[i] = z[i] + beta * (z[i] - x[i]);
                }
                theta = theta_next;
                std::mem::swap(&mut x, &mut z);
                iterations += 1;
                trace.push(objective(&x));
            }
        }
    }

    let convexity = p.convexity();
    Ok(SolverResult {
        objective: objective(&x),
        estimate: x,
        residual,
        iterations,
        converged,
        non_unique: !(convexity.strict || convexity.strong > 0.0),
        step: stepper.t,
        trace,
    })
}
