use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec::SimRng;
use crate::model::{Convexity, Domain, ExactSampler, Potential, Smoothness};

#[derive(Debug, Clone)]
enum Covariance {
    Diagonal { var: Vec<f64>, sd: Vec<f64> },
    Dense { precision: DMatrix<f64>, chol: DMatrix<f64> },
}

/// `‖y − Ax‖²/(2σ²) + ‖x‖²/(2τ²)`, kept so the potential evaluates its literal form.
#[derive(Debug, Clone)]
struct LinearObservation {
    a: DMatrix<f64>,
    y: DVector<f64>,
    noise_var: f64,
    prior_var: f64,
}

/// Gaussian posterior `φ(x) = ½(x − μ)ᵀΣ⁻¹(x − μ)`.
#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: Vec<f64>,
    cov: Covariance,
    observation: Option<LinearObservation>,
    convexity: Convexity,
    domain: Domain,
}

impl Gaussian {
    pub fn diagonal(mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        if mean.is_empty() || mean.len() != var.len() {
            return Err(Error::invalid("mean and variance must be non-empty and of equal length"));
        }
        if var.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("variances must be positive and finite"));
        }
        let (lo, hi) = var.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let sd = var.iter().map(|v| v.sqrt()).collect();
        Ok(Self {
            mean,
            cov: Covariance::Diagonal { var, sd },
            observation: None,
            convexity: Convexity { strong: 1.0 / hi, lipschitz: 1.0 / lo, strict: true },
            domain: Domain::Full,
        })
    }

    pub fn dense(mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if n == 0 || cov.nrows() != n || cov.ncols() != n {
            return Err(Error::invalid(format!("covariance must be {n}x{n}")));
        }
        if (&cov - cov.transpose()).amax() > 1e-12 * (1.0 + cov.amax()) {
            return Err(Error::invalid("covariance must be symmetric"));
        }
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::invalid("covariance must be positive definite"))?;
        let precision = chol.inverse();
        let eig = precision.clone().symmetric_eigen().eigenvalues;
        let convexity = Convexity { strong: eig.min(), lipschitz: eig.max(), strict: true };
        Ok(Self {
            mean,
            cov: Covariance::Dense { precision, chol: chol.l() },
            observation: None,
            convexity,
            domain: Domain::Full,
        })
    }

    /// Posterior of `y = Ax + noise`, `noise ~ N(0, σ²I)`, prior `x ~ N(0, τ²I)`.
    pub fn linear_observation(a: DMatrix<f64>, y: Vec<f64>, noise_var: f64, prior_var: f64) -> Result<Self> {
        if a.nrows() != y.len() {
            return Err(Error::invalid(format!("A has {} rows but y has length {}", a.nrows(), y.len())));
        }
        let n = a.ncols();
        let y = DVector::from_vec(y);
        let precision = a.transpose() * &a / noise_var + DMatrix::identity(n, n) / prior_var;
        let chol_p = precision
            .clone()
            .cholesky()
            .ok_or_else(|| Error::invalid("posterior precision is not positive definite"))?;
        let mean = chol_p.solve(&(a.transpose() * &y / noise_var));
        let cov = chol_p.inverse();
        let cov = (&cov + cov.transpose()) * 0.5;
        let mut g = Self::dense(mean.iter().copied().collect(), cov)?;
        g.observation = Some(LinearObservation { a, y, noise_var, prior_var });
        Ok(g)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    fn precision_times(&self, v: &[f64], out: &mut [f64]) {
        match &self.cov {
            Covariance::Diagonal { var, .. } => {
                for i in 0..v.len() {
                    out[i] = v[i] / var[i];
                }
            }
            Covariance::Dense { precision, .. } => {
                let r = precision * DVector::from_column_slice(v);
                out.copy_from_slice(r.as_slice());
            }
        }
    }
}

impl Potential for Gaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::C3
    }

    fn convexity(&self) -> Convexity {
        self.convexity
    }

    fn value_in_domain(&self, x: &[f64]) -> f64 {
        if let Some(obs) = &self.observation {
            let xv = DVector::from_column_slice(x);
            let r = &obs.y - &obs.a * &xv;
            return r.norm_squared() / (2.0 * obs.noise_var) + xv.norm_squared() / (2.0 * obs.prior_var);
        }
        match &self.cov {
            Covariance::Diagonal { var, .. } => x
                .iter()
                .zip(&self.mean)
                .zip(var)
                .map(|((xi, mi), v)| (xi - mi) * (xi - mi) / v)
                .sum::<f64>()
                * 0.5,
            Covariance::Dense { precision, .. } => {
                let d = DVector::from_iterator(x.len(), x.iter().zip(&self.mean).map(|(a, b)| a - b));
                0.5 * d.dot(&(precision * &d))
            }
        }
    }

    fn gradient_at(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.smooth_gradient(x, out);
        Ok(())
    }

    fn min_norm_subgradient(&self, x: &[f64], out: &mut [f64]) {
        self.smooth_gradient(x, out);
    }

    fn hessian_vec(&self, _x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        self.precision_times(v, out);
        Ok(())
    }

    fn has_hessian(&self) -> bool {
        true
    }

    fn prox_into(&self, u: &[f64], gamma: f64, out: &mut [f64]) -> Result<()> {
        match &self.cov {
            Covariance::Diagonal { var, .. } => {
                for i in 0..u.len() {
                    out[i] = (self.mean[i] / var[i] + u[i] / gamma) / (1.0 / var[i] + 1.0 / gamma);
                }
            }
            Covariance::Dense { precision, .. } => {
                let n = u.len();
                let lhs = precision + DMatrix::identity(n, n) / gamma;
                let rhs = precision * DVector::from_column_slice(&self.mean)
                    + DVector::from_column_slice(u) / gamma;
                let sol = lhs
                    .cholesky()
                    .ok_or_else(|| Error::invalid("prox system not positive definite"))?
                    .solve(&rhs);
                out.copy_from_slice(sol.as_slice());
            }
        }
        Ok(())
    }

    fn smooth_value(&self, x: &[f64]) -> f64 {
        self.value_in_domain(x)
    }

    fn smooth_gradient(&self, x: &[f64], out: &mut [f64]) {
        let d: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        self.precision_times(&d, out);
    }
}

impl ExactSampler for Gaussian {
    fn draw(&self, rng: &mut SimRng, out: &mut [f64]) {
        match &self.cov {
            Covariance::Diagonal { sd, .. } => {
                for i in 0..out.len() {
                    let z: f64 = StandardNormal.sample(rng);
                    out[i] = self.mean[i] + sd[i] * z;
                }
            }
            Covariance::Dense { chol, .. } => {
                let n = out.len();
                let z = DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)));
                let x = chol * z;
                for i in 0..n {
                    out[i] = self.mean[i] + x[i];
                }
            }
        }
    }
}
