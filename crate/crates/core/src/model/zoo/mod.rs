//! Concrete log-concave models with reference quantities.

mod constrained;
mod gaussian;
mod lasso;
mod separable;

use std::sync::Arc;

use nalgebra::DMatrix;

pub use constrained::{ExpOnCone, ExponentialCone, TruncatedGaussianBox};
pub use gaussian::Gaussian;
pub use lasso::Lasso1d;
pub use separable::{ExpLinear, LaplaceIid, Quartic};

use super::{ExactSampler, ModelInstance, ModelParams, Potential, References};
use crate::error::{Error, Result};
use crate::quadrature::integrate_to_infinity;
use crate::special::{truncated_std_moments, EULER_GAMMA};

/// Names accepted by [`make_model`].
pub const MODEL_NAMES: &[&str] = &[
    "gaussian",
    "gaussian_linear",
    "laplace_iid",
    "lasso_1d",
    "quartic",
    "exp_linear",
    "exponential_cone",
    "truncated_gaussian_box",
    "exp_on_cone",
];

fn instance<P>(name: &str, params: &ModelParams, model: P, sampled: bool, references: References) -> ModelInstance
where
    P: Potential + ExactSampler + 'static,
{
    let model = Arc::new(model);
    ModelInstance {
        name: name.to_string(),
        params: params.clone(),
        potential: model.clone(),
        sampler: if sampled { Some(model) } else { None },
        references,
    }
}

/// Builds a zoo model from its name and parameter map.
///
/// | name | parameters (defaults) |
/// |---|---|
/// | `gaussian` | `n`, `mu` (0), `var` (1) or `cov` matrix |
/// | `gaussian_linear` | `a` matrix, `y`, `noise_var` (1), `prior_var` (1) |
/// | `laplace_iid` | `n` (1), `scale` (1) |
/// | `lasso_1d` | `y` (2), `lambda` (1), `noise` (1) |
/// | `quartic` | `n` (1) |
/// | `exp_linear` | `n` (1) |
/// | `exponential_cone` | `n` (1), `rate` (1) |
/// | `truncated_gaussian_box` | `n`, `mu` (1), `sigma` (1), `lower` (0), `upper` (inf) |
/// | `exp_on_cone` | `n` (1) |
pub fn make_model(name: &str, params: &ModelParams) -> Result<ModelInstance> {
    match name {
        "gaussian" => {
            params.expect_keys(name, &["n", "mu", "var", "cov"])?;
            let mut n = resolve_dim(params, &["mu", "var"])?;
            if let (None, Some(rows)) = (params.dim("n")?, params.matrix("cov")?) {
                if n == 1 {
                    n = rows.len();
                }
            }
            let mu = params.broadcast("mu", n, 0.0)?;
            let model = match params.matrix("cov")? {
                Some(rows) => {
                    if params.contains("var") {
                        return Err(Error::invalid("give either `var` or `cov`, not both"));
                    }
                    Gaussian::dense(mu.clone(), matrix_from_rows(&rows))?
                }
                None => Gaussian::diagonal(mu.clone(), params.broadcast("var", n, 1.0)?)?,
            };
            Ok(instance(name, params, model, true, gaussian_refs(&mu)))
        }
        "gaussian_linear" => {
            params.expect_keys(name, &["a", "y", "noise_var", "prior_var"])?;
            let a = params
                .matrix("a")?
                .ok_or_else(|| Error::invalid("gaussian_linear requires the matrix `a`"))?;
            let y = params
                .vector("y")?
                .ok_or_else(|| Error::invalid("gaussian_linear requires the vector `y`"))?;
            let model = Gaussian::linear_observation(
                matrix_from_rows(&a),
                y,
                params.positive_or("noise_var", 1.0)?,
                params.positive_or("prior_var", 1.0)?,
            )?;
            let refs = gaussian_refs(model.mean());
            Ok(instance(name, params, model, true, refs))
        }
        "laplace_iid" => {
            params.expect_keys(name, &["n", "scale"])?;
            let n = params.dim("n")?.unwrap_or(1);
            let scale = params.positive_or("scale", 1.0)?;
            let refs = References {
                map: Some(vec![0.0; n]),
                mean: Some(vec![0.0; n]),
                expected_excess: Some(n as f64),
                score_mean: Some(vec![0.0; n]),
                shifted_map: None,
            };
            Ok(instance(name, params, LaplaceIid::new(n, scale), true, refs))
        }
        "lasso_1d" => {
            params.expect_keys(name, &["y", "lambda", "noise"])?;
            let model = Lasso1d::new(
                params.scalar_or("y", 2.0)?,
                params.scalar_or("lambda", 1.0)?,
                params.positive_or("noise", 1.0)?,
            )?;
            let refs = References {
                map: Some(vec![model.map()]),
                mean: Some(vec![model.mean()]),
                ..References::default()
            };
            Ok(instance(name, params, model, true, refs))
        }
        "quartic" => {
            params.expect_keys(name, &["n"])?;
            let n = params.dim("n")?.unwrap_or(1);
            let refs = References {
                map: Some(vec![0.0; n]),
                mean: Some(vec![0.0; n]),
                // |x|⁴ ~ Gamma(1/4, 1)
                expected_excess: Some(0.25 * n as f64),
                score_mean: Some(vec![0.0; n]),
                shifted_map: None,
            };
            Ok(instance(name, params, Quartic::new(n), true, refs))
        }
        "exp_linear" => {
            params.expect_keys(name, &["n"])?;
            let n = params.dim("n")?.unwrap_or(1);
            let refs = References {
                map: Some(vec![0.0; n]),
                mean: Some(vec![-EULER_GAMMA; n]),
                // E[eˣ − x] − 1 = E[t] − E[log t] − 1 = γ
                expected_excess: Some(EULER_GAMMA * n as f64),
                score_mean: Some(vec![0.0; n]),
                shifted_map: None,
            };
            Ok(instance(name, params, ExpLinear::new(n), true, refs))
        }
        "exponential_cone" => {
            params.expect_keys(name, &["n", "rate"])?;
            let n = params.dim("n")?.unwrap_or(1);
            let rate = params.positive_or("rate", 1.0)?;
            let refs = References {
                map: Some(vec![0.0; n]),
                mean: Some(vec![1.0 / rate; n]),
                expected_excess: Some(n as f64),
                score_mean: Some(vec![rate; n]),
                // the tilted objective is flat on the cone
                shifted_map: None,
            };
            Ok(instance(name, params, ExponentialCone::new(n, rate), true, refs))
        }
        "truncated_gaussian_box" => {
            params.expect_keys(name, &["n", "mu", "sigma", "lower", "upper"])?;
            let n = resolve_dim(params, &["mu", "lower", "upper"])?;
            let model = TruncatedGaussianBox::new(
                params.broadcast("mu", n, 1.0)?,
                params.positive_or("sigma", 1.0)?,
                params.broadcast("lower", n, 0.0)?,
                params.broadcast("upper", n, f64::INFINITY)?,
            )?;
            let refs = truncated_refs(&model);
            Ok(instance(name, params, model, true, refs))
        }
        "exp_on_cone" => {
            params.expect_keys(name, &["n"])?;
            let n = params.dim("n")?.unwrap_or(1);
            let (mean, score) = exp_on_cone_moments();
            let refs = References {
                map: Some(vec![0.0; n]),
                mean: Some(vec![mean; n]),
                expected_excess: Some((score - 1.0) * n as f64),
                score_mean: Some(vec![score; n]),
                shifted_map: Some(vec![score.ln(); n]),
            };
            Ok(instance(name, params, ExpOnCone::new(n), true, refs))
        }
        other => Err(Error::invalid(format!(
            "unknown model `{other}` (known: {})",
            MODEL_NAMES.join(", ")
        ))),
    }
}

/// Dimension from `n` or from the length of any vector-valued key; all must agree.
fn resolve_dim(params: &ModelParams, keys: &[&str]) -> Result<usize> {
    let mut n = params.dim("n")?;
    for key in keys {
        if let Some(v) = params.vector(key)? {
            if v.len() > 1 {
                match n {
                    Some(m) if m != v.len() => {
                        return Err(Error::invalid(format!(
                            "`{key}` has length {} but the dimension is {m}",
                            v.len()
                        )))
                    }
                    _ => n = Some(v.len()),
                }
            }
        }
    }
    Ok(n.unwrap_or(1))
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

fn gaussian_refs(mu: &[f64]) -> References {
    let n = mu.len();
    References {
        map: Some(mu.to_vec()),
        mean: Some(mu.to_vec()),
        // E[½(x−μ)ᵀΣ⁻¹(x−μ)] = n/2
        expected_excess: Some(0.5 * n as f64),
        score_mean: Some(vec![0.0; n]),
        shifted_map: None,
    }
}

fn truncated_refs(model: &TruncatedGaussianBox) -> References {
    let n = model.dim();
    let sigma = model.sigma();
    let s2 = sigma * sigma;
    let mut map = vec![0.0; n];
    let mut mean = vec![0.0; n];
    let mut score = vec![0.0; n];
    let mut excess = 0.0;
    for i in 0..n {
        let (a, b) = model.std_bounds(i);
        let (m, v) = truncated_std_moments(a, b);
        let mu = model.mu()[i];
        map[i] = mu.clamp(mu + sigma * a, mu + sigma * b);
        mean[i] = mu + sigma * m;
        score[i] = sigma * m / s2;
        excess += 0.5 * (v + m * m) - (map[i] - mu).powi(2) / (2.0 * s2);
    }
    References {
        map: Some(map),
        shifted_map: Some(mean.clone()),
        mean: Some(mean),
        expected_excess: Some(excess),
        score_mean: Some(score),
    }
}

/// Posterior mean and `E[eˣ]` for the density `∝ exp(−eˣ)` on `x ≥ 0`.
/// With `t = eˣ` the density becomes `e^{-t}/t` on `[1, ∞)`.
fn exp_on_cone_moments() -> (f64, f64) {
    let z = integrate_to_infinity(1.0, |t| (-t).exp() / t);
    let mean = integrate_to_infinity(1.0, |t| t.ln() * (-t).exp() / t) / z;
    let e_t = integrate_to_infinity(1.0, |t| (-t).exp()) / z;
    (mean, e_t)
}
