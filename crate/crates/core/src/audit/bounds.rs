//! Expected-loss and tail bounds for the MAP estimator.

use super::{exact_moments, map_point, mean_moments, AuditConfig, AuditReport, STREAM_LOSS, STREAM_MEAN, STREAM_TAIL};
use crate::error::{Error, Result};
use crate::geometry::{bregman, generalized_dual};
use crate::linalg;
use crate::model::{self, make_model, ModelInstance, ModelParams, Smoothness};

/// Upper end of the admissible range `ε ∈ (0, 4/√3)`.
pub const EPS_MAX: f64 = 2.309_401_076_758_503;

/// `3 e^{−nε²/16}`.
pub fn prop4_bound(n: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < EPS_MAX) {
        return Err(Error::invalid(format!("ε = {eps} is outside (0, 4/√3)")));
    }
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    Ok(3.0 * (-(n as f64) * eps * eps / 16.0).exp())
}

/// `E[(φ(x) − φ(x̂_MAP))/n] ≤ 1`. The closed-form value, when the zoo has one,
/// is attached as the `reference` extra.
pub fn expected_error_map(model: &ModelInstance, config: &AuditConfig) -> Result<AuditReport> {
    let n = model.dim() as f64;
    let map = map_point(model)?;
    let p = model.potential.clone();
    let f_map = model::eval(&*p, &map)?;
    let loss = exact_moments(model, config, STREAM_LOSS, 1, move |x, out| {
        out[0] = (p.value_in_domain(x) - f_map) / n;
    })?;
    let se = loss.std_error()[0];
    let mut report = AuditReport::upper_bound("expected_error_map", model, config, loss.mean[0], 1.0, 3.0 * se);
    report.extra("se", &[se]);
    report.extra("map", &map);
    if let Some(excess) = model.references.expected_excess {
        report.extra("reference", &[excess / n]);
    }
    Ok(report)
}

/// `E[D*_{φ,q}(x̂_MMSE, x)/n] ≤ E[D*_{φ,0}(x̂_MAP, x)/n] ≤ 1` with
/// `q = ∇φ(x̂_MMSE)`.
///
/// The posterior mean comes from its own stream; both losses are then
/// evaluated on a shared second stream so their difference has a paired
/// standard error. `estimate` is the MMSE loss and `reference` the MAP loss.
pub fn expected_error_mmse(model: &ModelInstance, config: &AuditConfig) -> Result<AuditReport> {
    let p = model.potential.clone();
    if p.smoothness() == Smoothness::NonSmooth {
        return Err(Error::unsupported("the MMSE loss needs a differentiable potential"));
    }
    let n = model.dim() as f64;
    let mmse = mean_moments(model, config, STREAM_MEAN)?.mean;
    let q = model::grad(&*p, &mmse)?;
    let f_mmse = model::eval(&*p, &mmse)?;
    let map = map_point(model)?;
    let f_map = model::eval(&*p, &map)?;
    let (mmse_c, q_c) = (mmse.clone(), q.clone());
    let losses = exact_moments(model, config, STREAM_LOSS, 3, move |x, out| {
        let fx = p.value_in_domain(x);
        let mmse_loss = (fx - f_mmse - linalg::dot(&q_c, &linalg::sub(x, &mmse_c))) / n;
        let map_loss = (fx - f_map) / n;
        out[0] = mmse_loss;
        out[1] = map_loss;
        out[2] = map_loss - mmse_loss;
    })?;
    let se = losses.std_error();
    let (mmse_loss, map_loss, gap) = (losses.mean[0], losses.mean[1], losses.mean[2]);
    let ordered = mmse_loss <= map_loss + 3.0 * se[2];
    let bounded = map_loss <= 1.0 + 3.0 * se[1];

    let mut report = AuditReport::upper_bound("expected_error_mmse", model, config, mmse_loss, map_loss, 3.0 * se[2]);
    report.pass = ordered && bounded;
    report.extra("map_loss", &[map_loss]);
    report.extra("map_loss_se", &[se[1]]);
    report.extra("mmse_loss_se", &[se[0]]);
    report.extra("gap", &[gap]);
    report.extra("gap_se", &[se[2]]);
    report.extra("mmse", &mmse);
    report.flag("strict", gap > 3.0 * se[2]);
    Ok(report)
}

/// Exceedance frequency of `(φ(x) − φ(x̂_MAP))/n ≥ 1 + ε` for every
/// `(n, ε)` cell. Draws are shared across `ε` for a given `n`; each `n`
/// has its own stream. Rows come back in `n`-major order.
pub fn tail_audit(
    name: &str,
    params: &ModelParams,
    n_list: &[usize],
    eps_list: &[f64],
    config: &AuditConfig,
) -> Result<Vec<AuditReport>> {
    let bounds: Vec<Vec<f64>> = n_list
        .iter()
        .map(|&n| eps_list.iter().map(|&e| prop4_bound(n, e)).collect())
        .collect::<Result<_>>()?;
    let mut reports = Vec::new();
    for (cell, &n) in n_list.iter().enumerate() {
        let model = make_model(name, &params.clone().with("n", n))?;
        let map = map_point(&model)?;
        let p = model.potential.clone();
        let f_map = model::eval(&*p, &map)?;
        let thresholds: Vec<f64> = eps_list.iter().map(|e| 1.0 + e).collect();
        let freq = exact_moments(
            &model,
            config,
            STREAM_TAIL.wrapping_add(cell as u64 * 0x1_0000),
            eps_list.len(),
            move |x, out| {
                let ratio = (p.value_in_domain(x) - f_map) / n as f64;
                for (o, t) in out.iter_mut().zip(&thresholds) {
                    *o = f64::from(u8::from(ratio >= *t));
                }
            },
        )?;
        for (j, &eps) in eps_list.iter().enumerate() {
            let bound = bounds[cell][j];
            let p0 = bound.min(1.0);
            let slack = 3.0 * (p0 * (1.0 - p0) / config.samples as f64).sqrt();
            let mut report = AuditReport::upper_bound("tail_audit", &model, config, freq.mean[j], bound, slack);
            report.extra("eps", &[eps]);
            reports.push(report);
        }
    }
    Ok(reports)
}

/// `D_φ(x̂_MMSE, x̂_MAP)/n ≤ 1`: the two estimators are close in the
/// model's own divergence. On a constrained domain the MAP point may sit on
/// the boundary; the linear term then uses the minimum-norm subgradient there.
/// The slack is the first-order effect of the Monte Carlo error in `x̂_MMSE`.
pub fn duality_closure(model: &ModelInstance, config: &AuditConfig) -> Result<AuditReport> {
    let p = &*model.potential;
    if p.smoothness() == Smoothness::NonSmooth {
        return Err(Error::unsupported("duality closure needs a differentiable potential"));
    }
    let n = model.dim() as f64;
    let moments = mean_moments(model, config, STREAM_MEAN)?;
    let mmse = &moments.mean;
    let map = map_point(model)?;
    let q_map = model::subgrad(p, &map)?;
    let value = if model.is_constrained() {
        generalized_dual(p, &map, mmse, &q_map)?.value / n
    } else {
        bregman(p, mmse, &map)?.value / n
    };
    let g_mmse = model::grad(p, mmse)?;
    let g_map = q_map;
    let se = moments.std_error();
    let slack: f64 =
        g_mmse.iter().zip(&g_map).zip(&se).map(|((a, b), s)| (a - b).abs() * 3.0 * s).sum::<f64>() / n;
    let mut report = AuditReport::upper_bound("duality_closure", model, config, value, 1.0, slack);
    report.extra("mmse", mmse);
    report.extra("map", &map);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_examples() {
        assert!((prop4_bound(16, 1.0).unwrap() - 3.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((prop4_bound(16, 1.0).unwrap() - 1.10364).abs() < 1e-5);
        assert!((prop4_bound(1000, 0.4).unwrap() - 1.3619e-4).abs() < 1e-8);
        let edge = 4.0 / 3f64.sqrt();
        assert!(matches!(prop4_bound(10, edge), Err(Error::InvalidArgument(_))));
        assert!(prop4_bound(10, 0.0).is_err());
        assert!(prop4_bound(10, edge - 1e-9).is_ok());
    }

    #[test]
    fn eps_max_is_four_over_root_three() {
        // correctly rounded 4/√3; the computed quotient may sit one ulp above
        assert!((EPS_MAX - 4.0 / 3f64.sqrt()).abs() <= 4.0 * f64::EPSILON);
        assert!(prop4_bound(1, EPS_MAX).is_err());
    }
}
