mod common;

use std::sync::Arc;

use bayesgeo::geometry::{
    biconjugate, bregman, bregman_via_conjugate, canonical_numeric, canonical_numeric_checked, dual_bregman,
    dual_metric_check, generalized_dual, legendre, metric, LegendreBudget,
};
use bayesgeo::model::{self, make_model, ModelInstance, ModelParams, Potential, ScaledSum, Smoothness};
use bayesgeo::Error;
use proptest::prelude::*;

use common::{draws, zoo};

fn smooth_unconstrained() -> Vec<ModelInstance> {
    zoo()
        .into_iter()
        .filter(|m| !m.is_constrained() && m.potential.smoothness() != Smoothness::NonSmooth)
        .collect()
}

fn pairs(m: &ModelInstance, count: usize, stream: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let pts = draws(m, 2 * count, stream);
    pts.chunks_exact(2).map(|c| (c[0].clone(), c[1].clone())).collect()
}

#[test]
fn canonical_equals_bregman_on_random_pairs() {
    for m in smooth_unconstrained() {
        let p = &*m.potential;
        for (u, x) in pairs(&m, 100, 10) {
            let b = bregman(p, &u, &x).unwrap().value;
            let c = canonical_numeric(p, &u, &x, 30).unwrap().value;
            assert!((b - c).abs() < 1e-8 * (1.0 + b.abs()), "{}: bregman {b}, canonical {c}", m.name);
        }
    }
}

#[test]
fn canonical_quadrature_residual_is_small() {
    let m = make_model("exp_linear", &ModelParams::new().with("n", 2usize)).unwrap();
    let (_, residual) = canonical_numeric_checked(&*m.potential, &[-2.0, 1.5], &[1.0, -0.5], 30).unwrap();
    assert!(residual < 1e-12);
}

#[test]
fn divergence_is_nonnegative_and_vanishes_on_the_diagonal() {
    for m in smooth_unconstrained() {
        let p = &*m.potential;
        for (u, x) in pairs(&m, 200, 11) {
            let d = bregman(p, &u, &x).unwrap().value;
            assert!(d >= 0.0, "{}: D = {d}", m.name);
            assert_eq!(bregman(p, &x, &x).unwrap().value, 0.0);
            let dual = dual_bregman(p, &u, &x).unwrap().value;
            assert_eq!(dual, bregman(p, &x, &u).unwrap().value);
        }
    }
}

#[test]
fn strict_convexity_separates_points() {
    for m in smooth_unconstrained().into_iter().filter(|m| m.potential.convexity().strict) {
        for (u, x) in pairs(&m, 50, 12) {
            assert!(bregman(&*m.potential, &u, &x).unwrap().value > 0.0, "{}", m.name);
        }
    }
}

#[test]
fn fenchel_young_matches_the_direct_formula() {
    let budget = LegendreBudget::default();
    for m in smooth_unconstrained() {
        let p = &*m.potential;
        for (u, x) in pairs(&m, 20, 13) {
            let direct = bregman(p, &u, &x).unwrap().value;
            let via = bregman_via_conjugate(p, &u, &x, budget).unwrap();
            assert!((direct - via).abs() < 1e-7 * (1.0 + direct.abs()), "{}: {direct} vs {via}", m.name);
        }
    }
}

#[test]
fn fenchel_young_equality_at_the_dual_point() {
    let budget = LegendreBudget::default();
    for m in smooth_unconstrained() {
        let p = &*m.potential;
        for x in draws(&m, 20, 14) {
            let eta = model::grad(p, &x).unwrap();
            let dual = legendre(p, &eta, budget).unwrap();
            let fx = model::eval(p, &x).unwrap();
            let gap = fx + dual.conjugate - eta.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
            assert!(gap.abs() < 1e-8 * (1.0 + fx.abs()), "{}: gap {gap}", m.name);
        }
    }
}

#[test]
fn divergence_is_linear_in_the_potential() {
    let a = make_model("quartic", &ModelParams::new().with("n", 2usize)).unwrap().potential;
    let b = make_model("exp_linear", &ModelParams::new().with("n", 2usize)).unwrap().potential;
    let (alpha, beta) = (0.7, 2.5);
    let sum = ScaledSum::new(vec![(alpha, Arc::clone(&a)), (beta, Arc::clone(&b))]).unwrap();
    let pts = [([0.3, -1.2], [1.1, 0.4]), ([-2.0, 0.5], [0.0, 0.0]), ([1.5, 1.5], [-0.5, 2.0])];
    for (u, x) in pts {
        let lhs = bregman(&sum, &u, &x).unwrap().value;
        let rhs = alpha * bregman(&*a, &u, &x).unwrap().value + beta * bregman(&*b, &u, &x).unwrap().value;
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }
}

#[test]
fn local_expansion_is_half_the_metric() {
    for m in smooth_unconstrained() {
        let p = &*m.potential;
        let x = draws(&m, 1, 15).remove(0);
        let g = metric(p, &x).unwrap();
        let dir: Vec<f64> = (0..m.dim()).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let quad = (0..m.dim())
            .flat_map(|i| (0..m.dim()).map(move |j| (i, j)))
            .map(|(i, j)| dir[i] * g[(i, j)] * dir[j])
            .sum::<f64>();
        let mut errs = Vec::new();
        for h in [1e-1, 1e-2, 1e-3] {
            let u: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + h * d).collect();
            let d = bregman(p, &u, &x).unwrap().value;
            errs.push((d - 0.5 * h * h * quad).abs());
        }
        // remainder is O(h³): each decade shrinks it by about a thousand
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] * 2e-2 + 1e-15, "{}: {errs:?}", m.name);
        }
    }
}

#[test]
fn induced_metric_recovers_the_hessian() {
    for m in smooth_unconstrained() {
        let p = &*m.potential;
        let x = draws(&m, 1, 16).remove(0);
        let g = metric(p, &x).unwrap();
        let h = 1e-3;
        let n = m.dim();
        for i in 0..n {
            for j in 0..n {
                // ∂²/∂u_i∂u_j D(u, x) at u = x by central differences
                let d = |si: f64, sj: f64| {
                    let mut u = x.clone();
                    u[i] += si * h;
                    u[j] += sj * h;
                    bregman(p, &u, &x).unwrap().value
                };
                let fd = (d(1.0, 1.0) - d(1.0, -1.0) - d(-1.0, 1.0) + d(-1.0, -1.0)) / (4.0 * h * h);
                assert!((fd - g[(i, j)]).abs() < 1e-4 * (1.0 + g[(i, j)].abs()), "{}: ({i},{j})", m.name);
            }
        }
    }
}

#[test]
fn biconjugate_recovers_the_potential() {
    let budget = LegendreBudget::default();
    for m in zoo().into_iter().filter(|m| !m.is_constrained()) {
        let p = &*m.potential;
        for x in draws(&m, 20, 17) {
            let fx = model::eval(p, &x).unwrap();
            let back = biconjugate(p, &x, budget).unwrap();
            assert!((fx - back).abs() < 1e-6 * (1.0 + fx.abs()), "{}: φ = {fx}, φ** = {back}", m.name);
        }
    }
}

#[test]
fn dual_metric_inverts_the_metric() {
    let budget = LegendreBudget::default();
    let diag = make_model("gaussian", &ModelParams::new().with("var", vec![1.0, 0.25])).unwrap();
    assert!(dual_metric_check(&*diag.potential, &[0.3, -0.7], None, budget).unwrap() < 1e-5);
    for m in smooth_unconstrained().into_iter().filter(|m| m.potential.convexity().strict) {
        for x in draws(&m, 5, 18) {
            let err = dual_metric_check(&*m.potential, &x, None, budget).unwrap();
            assert!(err < 1e-4, "{}: ‖g*·g − I‖ = {err}", m.name);
        }
    }
}

#[test]
fn legendre_examples() {
    let budget = LegendreBudget::default();
    let half_square = make_model("gaussian", &ModelParams::new()).unwrap();
    let d = legendre(&*half_square.potential, &[1.0], budget).unwrap();
    assert!((d.conjugate - 0.5).abs() < 1e-12 && (d.x[0] - 1.0).abs() < 1e-12);

    let e = make_model("exp_linear", &ModelParams::new()).unwrap();
    let d = legendre(&*e.potential, &[0.0], budget).unwrap();
    assert!((d.conjugate + 1.0).abs() < 1e-10 && d.x[0].abs() < 1e-8);

    // φ(x) = ½xᵀΣ⁻¹x has φ*(η) = ½ηᵀΣη
    let cov = vec![vec![2.0, 0.6], vec![0.6, 1.0]];
    let g = make_model("gaussian", &ModelParams::new().with("cov", cov.clone())).unwrap();
    let eta = [0.4, -1.3];
    let expect = 0.5 * (0..2).map(|i| (0..2).map(|j| eta[i] * cov[i][j] * eta[j]).sum::<f64>()).sum::<f64>();
    let d = legendre(&*g.potential, &eta, budget).unwrap();
    assert!((d.conjugate - expect).abs() < 1e-10);

    // ∇φ = eˣ − 1 only reaches (−1, ∞); η = −1.5 has no maximiser
    assert!(legendre(&*e.potential, &[-1.5], budget).is_err());
    let d = legendre(&*e.potential, &[1.5], budget).unwrap();
    assert!((d.x[0] - 2.5f64.ln()).abs() < 1e-10);
}

#[test]
fn generalized_dual_reduces_to_bregman_with_the_gradient() {
    for m in smooth_unconstrained() {
        let p = &*m.potential;
        for (s, x) in pairs(&m, 20, 19) {
            let q = model::grad(p, &s).unwrap();
            let gd = generalized_dual(p, &s, &x, &q).unwrap().value;
            let b = bregman(p, &x, &s).unwrap().value;
            assert!((gd - b).abs() < 1e-12 * (1.0 + b.abs()), "{}", m.name);
        }
    }
}

#[test]
fn divergence_examples() {
    let g = make_model("gaussian", &ModelParams::new().with("n", 2usize)).unwrap();
    assert!((bregman(&*g.potential, &[1.0, 0.0], &[0.0, 1.0]).unwrap().value - 1.0).abs() < 1e-15);
    let e = make_model("exp_linear", &ModelParams::new()).unwrap();
    let expect = 1f64.exp() - 2.0;
    assert!((bregman(&*e.potential, &[1.0], &[0.0]).unwrap().value - expect).abs() < 1e-14);
    let l = make_model("laplace_iid", &ModelParams::new()).unwrap();
    assert!(matches!(bregman(&*l.potential, &[1.0], &[0.0]), Err(Error::NonSmoothPoint(_))));
    let c = make_model("exponential_cone", &ModelParams::new()).unwrap();
    assert!(matches!(bregman(&*c.potential, &[-1.0], &[1.0]), Err(Error::OutsideDomain)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gaussian_divergence_is_the_mahalanobis_distance(
        u in prop::collection::vec(-5.0f64..5.0, 2),
        x in prop::collection::vec(-5.0f64..5.0, 2),
        v0 in 0.1f64..4.0,
        v1 in 0.1f64..4.0,
    ) {
        let m = make_model("gaussian", &ModelParams::new().with("var", vec![v0, v1])).unwrap();
        let d = bregman(&*m.potential, &u, &x).unwrap().value;
        let expect = 0.5 * ((u[0] - x[0]).powi(2) / v0 + (u[1] - x[1]).powi(2) / v1);
        prop_assert!((d - expect).abs() < 1e-12 * (1.0 + expect));
    }

    #[test]
    fn quartic_divergence_is_symmetric_only_on_the_diagonal(u in -3.0f64..3.0, x in -3.0f64..3.0) {
        let m = make_model("quartic", &ModelParams::new()).unwrap();
        let p: &dyn Potential = &*m.potential;
        let d = bregman(p, &[u], &[x]).unwrap().value;
        // closed form: (u − x)²(3x² + 2ux + u²)
        let expect = (u - x).powi(2) * (3.0 * x * x + 2.0 * u * x + u * u);
        prop_assert!((d - expect).abs() < 1e-10 * (1.0 + expect));
        prop_assert!(d >= 0.0);
    }
}
