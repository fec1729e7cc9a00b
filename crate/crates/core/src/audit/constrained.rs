//! The score identity and its failure on constrained domains.

use super::argmin::reduced_argmin;
use super::{
    map_point, mean_moments, score_moments, three_se, worst_coordinate, AuditConfig, AuditReport, STREAM_MEAN,
};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ModelInstance, NonsmoothKind};

/// Monte Carlo `E[∇f(x)]` for the smooth part `f`.
///
/// On `R^n` every coordinate must be within 3 se of zero. On a constrained
/// domain the identity fails by design: the check then passes when the
/// estimate matches the model's reference score and is resolved away from
/// zero (`flag nonzero`). A general non-smooth penalty moves part of the
/// score into the subdifferential, so such models are refused.
pub fn score_identity(model: &ModelInstance, config: &AuditConfig) -> Result<AuditReport> {
    if model.potential.nonsmooth_kind() == NonsmoothKind::General {
        return Err(Error::unsupported(format!(
            "model `{}` has a non-smooth penalty; the score identity needs a differentiable potential",
            model.name
        )));
    }
    let n = model.dim();
    let score = score_moments(model, config)?;
    let slack = three_se(&score);
    let constrained = model.is_constrained();
    let reference = if constrained {
        model.references.score_mean.clone().ok_or_else(|| {
            Error::unsupported(format!("model `{}` has no reference score on its constrained domain", model.name))
        })?
    } else {
        vec![0.0; n]
    };
    let i = worst_coordinate(&score.mean, &reference, &slack);
    let mut report = AuditReport::equality("score_identity", model, config, score.mean[i], reference[i], slack[i]);
    report.pass = (0..n).all(|j| (score.mean[j] - reference[j]).abs() <= slack[j]);
    report.extra("score", &score.mean);
    report.extra("score_se", &score.std_error());
    if constrained {
        let nonzero = score.mean.iter().zip(&slack).any(|(m, s)| m.abs() > *s);
        report.flag("nonzero", nonzero);
        report.pass &= nonzero;
    }
    Ok(report)
}

/// `argmin_{u ∈ dom} φ(u) − uᵀE[∇f(x)]`, the primal Bayes estimator on a
/// constrained domain, reported with the MAP point and posterior mean.
///
/// Passes when the estimate matches the reference within the propagated
/// slack and is separated from the MAP point. When the tilted objective is
/// flat on the domain (a linear potential on a cone) the argmin is the whole
/// domain: the solver's starting point is returned and flagged degenerate.
pub fn shifted_map(model: &ModelInstance, config: &AuditConfig) -> Result<AuditReport> {
    if !model.is_constrained() {
        return Err(Error::unsupported(format!(
            "model `{}` is unconstrained; use bayes_argmin_primal",
            model.name
        )));
    }
    let p = &*model.potential;
    let n = model.dim();
    let score = score_moments(model, config)?;
    let spread = three_se(&score);
    let map = map_point(model)?;
    let mmse = mean_moments(model, config, STREAM_MEAN)?;

    let mut start = vec![0.0; n];
    p.domain().project(&p.domain().center(n), &mut start);
    let mut report = if is_flat(model, &score.mean, &spread, &start) {
        let mut r = AuditReport::point_equality("shifted_map", model, config, &start, &start, 0.0);
        r.degenerate = true;
        r.pass = true;
        r
    } else {
        let estimate = reduced_argmin(p, &score.mean, None)?;
        let mut propagated = 0.0;
        let mut shifted = score.mean.clone();
        for i in 0..n {
            let mut worst: f64 = 0.0;
            for sign in [-1.0, 1.0] {
                shifted[i] = score.mean[i] + sign * spread[i];
                worst = worst.max(linalg::dist(&reduced_argmin(p, &shifted, None)?, &estimate));
            }
            shifted[i] = score.mean[i];
            propagated += worst * worst;
        }
        let slack = propagated.sqrt() + 1e-6;
        let reference = model.references.shifted_map.clone().unwrap_or_else(|| estimate.clone());
        let mut r = AuditReport::point_equality("shifted_map", model, config, &estimate, &reference, slack);
        let mmse_slack = 3.0 * linalg::norm(&mmse.std_error());
        let apart_from_map = linalg::dist(&estimate, &map) > slack;
        r.flag("distinct_from_map", apart_from_map);
        r.flag("distinct_from_mmse", linalg::dist(&estimate, &mmse.mean) > slack + mmse_slack);
        r.flag("mmse_distinct_from_map", linalg::dist(&mmse.mean, &map) > mmse_slack);
        r.pass &= apart_from_map;
        r
    };
    report.extra("map", &map);
    report.extra("mmse", &mmse.mean);
    report.extra("score", &score.mean);
    Ok(report)
}

/// The tilted gradient `∇f(u) − ĝ` vanishes, within Monte Carlo error, at
/// two separated points of the domain.
fn is_flat(model: &ModelInstance, score: &[f64], spread: &[f64], start: &[f64]) -> bool {
    let p = &*model.potential;
    let c = p.convexity();
    if c.strict || c.strong > 0.0 {
        return false;
    }
    let far: Vec<f64> = start.iter().map(|v| v + 1.0).collect();
    let mut probe = vec![0.0; start.len()];
    p.domain().project(&far, &mut probe);
    let mut g = vec![0.0; start.len()];
    [start, probe.as_slice()].iter().all(|u| {
        p.smooth_gradient(u, &mut g);
        g.iter().zip(score).zip(spread).all(|((gi, si), sp)| (gi - si).abs() <= *sp)
    })
}
