//! Monte Carlo audits of the decision-theoretic identities and bounds.
//!
//! Every audit draws from the model's exact sampler through the batched
//! executor, so a report is a pure function of `(model, AuditConfig)`.
//! The slack convention is three standard errors throughout; frequency
//! bounds use the binomial three-sigma band evaluated at the bound.

mod argmin;
mod bounds;
mod constrained;

use std::collections::BTreeMap;

use serde::Serialize;

pub use argmin::{bayes_argmin_dual, bayes_argmin_primal, ArgminMethod};
pub use bounds::{duality_closure, expected_error_map, expected_error_mmse, prop4_bound, tail_audit, EPS_MAX};
pub use constrained::{score_identity, shifted_map};

use crate::error::{Error, Result};
use crate::exec::{Exec, SimRng};
use crate::linalg;
use crate::mc::{stream_moments, Moments};
use crate::model::ModelInstance;
use crate::solver::{solve_map, SolverConfig};

/// Sample size, seed and scheduling shared by all audits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditConfig {
    pub samples: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl AuditConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self { samples, seed, exec: Exec::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|estimate − reference| ≤ slack`.
    Equality,
    /// `estimate ≤ bound + slack`.
    UpperBound,
}

/// One audited claim.
///
/// Vector quantities are reported directly when `n = 1`; otherwise
/// `estimate` is the Euclidean distance to the reference point and
/// `reference` is zero. Full vectors go to `extras`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub check: String,
    pub model: String,
    pub n: usize,
    pub samples: usize,
    pub estimate: f64,
    pub reference: f64,
    pub slack: f64,
    pub pass: bool,
    pub seed: u64,
    pub comparison: Comparison,
    /// The audited argmin is a set, not a point; the estimate is the
    /// solver's limit point.
    pub degenerate: bool,
    pub extras: BTreeMap<String, Vec<f64>>,
}

impl AuditReport {
    fn base(check: &str, model: &ModelInstance, config: &AuditConfig, comparison: Comparison) -> Self {
        Self {
            check: check.to_string(),
            model: model.name.clone(),
            n: model.dim(),
            samples: config.samples,
            estimate: f64::NAN,
            reference: f64::NAN,
            slack: f64::NAN,
            pass: false,
            seed: config.seed,
            comparison,
            degenerate: false,
            extras: BTreeMap::new(),
        }
    }

    fn equality(check: &str, model: &ModelInstance, config: &AuditConfig, estimate: f64, reference: f64, slack: f64) -> Self {
        let mut r = Self::base(check, model, config, Comparison::Equality);
        r.estimate = estimate;
        r.reference = reference;
        r.slack = slack;
        r.pass = (estimate - reference).abs() <= slack;
        r
    }

    /// Point agreement in Euclidean norm.
    fn point_equality(
        check: &str,
        model: &ModelInstance,
        config: &AuditConfig,
        estimate: &[f64],
        reference: &[f64],
        slack: f64,
    ) -> Self {
        let mut r = if estimate.len() == 1 {
            Self::equality(check, model, config, estimate[0], reference[0], slack)
        } else {
            Self::equality(check, model, config, linalg::dist(estimate, reference), 0.0, slack)
        };
        r.extra("estimate", estimate);
        r.extra("reference", reference);
        r
    }

    fn upper_bound(check: &str, model: &ModelInstance, config: &AuditConfig, estimate: f64, bound: f64, slack: f64) -> Self {
        let mut r = Self::base(check, model, config, Comparison::UpperBound);
        r.estimate = estimate;
        r.reference = bound;
        r.slack = slack;
        r.pass = estimate <= bound + slack;
        r
    }

    fn extra(&mut self, key: &str, value: &[f64]) {
        self.extras.insert(key.to_string(), value.to_vec());
    }

    fn flag(&mut self, key: &str, value: bool) {
        self.extras.insert(key.to_string(), vec![f64::from(u8::from(value))]);
    }

    /// A boolean stored with [`AuditReport::flag`].
    pub fn flag_value(&self, key: &str) -> Option<bool> {
        self.extras.get(key).and_then(|v| v.first()).map(|v| *v != 0.0)
    }

    pub fn extra_value(&self, key: &str) -> Option<f64> {
        self.extras.get(key).and_then(|v| v.first()).copied()
    }
}

// Random streams; distinct per role so audits never share draws.
const STREAM_SCORE: u64 = 0xA0D1_0001;
const STREAM_MEAN: u64 = 0xA0D1_0002;
const STREAM_MEAN_CHECK: u64 = 0xA0D1_0003;
const STREAM_LOSS: u64 = 0xA0D1_0004;
const STREAM_TAIL: u64 = 0xA0D1_0005;

fn check_samples(config: &AuditConfig) -> Result<()> {
    if config.samples < 2 {
        return Err(Error::invalid("audits need at least two draws"));
    }
    Ok(())
}

/// Moments of `statistic(x)` over exact posterior draws.
fn exact_moments<S>(model: &ModelInstance, config: &AuditConfig, stream: u64, k: usize, statistic: S) -> Result<Moments>
where
    S: Fn(&[f64], &mut [f64]) + Sync + Send,
{
    check_samples(config)?;
    let sampler = model.exact_sampler()?.clone();
    Ok(stream_moments(
        config.exec,
        config.samples,
        config.seed,
        stream,
        model.dim(),
        k,
        move |rng: &mut SimRng, x: &mut [f64]| sampler.draw(rng, x),
        statistic,
    ))
}

/// `E[∇f(x)]` of the smooth part.
fn score_moments(model: &ModelInstance, config: &AuditConfig) -> Result<Moments> {
    let p = model.potential.clone();
    exact_moments(model, config, STREAM_SCORE, model.dim(), move |x, out| p.smooth_gradient(x, out))
}

fn mean_moments(model: &ModelInstance, config: &AuditConfig, stream: u64) -> Result<Moments> {
    exact_moments(model, config, stream, model.dim(), |x, out| out.copy_from_slice(x))
}

fn map_point(model: &ModelInstance) -> Result<Vec<f64>> {
    let r = solve_map(model, &SolverConfig::default())?;
    if !r.converged {
        return Err(Error::Convergence { iterations: r.iterations, residual: r.residual });
    }
    Ok(r.estimate)
}

/// Three standard errors per coordinate.
fn three_se(m: &Moments) -> Vec<f64> {
    m.std_error().iter().map(|s| 3.0 * s).collect()
}

/// The coordinate with the largest `|estimate − reference| / slack`.
fn worst_coordinate(estimate: &[f64], reference: &[f64], slack: &[f64]) -> usize {
    let ratio = |i: usize| {
        let d = (estimate[i] - reference[i]).abs();
        if slack[i] > 0.0 {
            d / slack[i]
        } else if d > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    };
    (0..estimate.len()).max_by(|&a, &b| ratio(a).total_cmp(&ratio(b))).unwrap_or(0)
}
