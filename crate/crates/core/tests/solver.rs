mod common;

use bayesgeo::linalg;
use bayesgeo::model::{make_model, ModelParams, NonsmoothKind};
use bayesgeo::solver::{certify_optimality, solve_map, Method, SolverConfig, StepSize};
use proptest::prelude::*;

use common::zoo;

fn applicable(kind: NonsmoothKind) -> Vec<Method> {
    match kind {
        NonsmoothKind::None => vec![Method::Gradient, Method::ProximalGradient, Method::Fista],
        NonsmoothKind::Indicator => vec![Method::ProximalGradient, Method::Fista, Method::ProjectedGradient],
        _ => vec![Method::ProximalGradient, Method::Fista],
    }
}

#[test]
fn every_method_recovers_the_reference_map() {
    for m in zoo() {
        let Some(truth) = &m.references.map else { continue };
        for method in applicable(m.potential.nonsmooth_kind()) {
            let r = solve_map(&m, &SolverConfig::with_method(method)).unwrap();
            assert!(r.converged, "{} {method:?}: residual {}", m.name, r.residual);
            let err = linalg::dist(&r.estimate, truth);
            assert!(err <= 1e-6, "{} {method:?}: ‖x̂ − x*‖ = {err}", m.name);
        }
    }
}

#[test]
fn fista_and_proximal_gradient_agree() {
    for m in zoo() {
        let pg = solve_map(&m, &SolverConfig::with_method(Method::ProximalGradient)).unwrap();
        let fista = solve_map(&m, &SolverConfig::with_method(Method::Fista)).unwrap();
        if pg.non_unique {
            // a flat face of minimisers: only the optimal value is determined
            assert!((pg.objective - fista.objective).abs() <= 1e-8, "{}", m.name);
        } else {
            assert!(linalg::dist(&pg.estimate, &fista.estimate) <= 1e-6, "{}", m.name);
        }
    }
}

#[test]
fn proximal_gradient_descends_monotonically() {
    for m in zoo() {
        let r = solve_map(&m, &SolverConfig::with_method(Method::ProximalGradient)).unwrap();
        for w in r.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()), "{}: {} then {}", m.name, w[0], w[1]);
        }
    }
}

#[test]
fn reference_maps_are_certified() {
    for m in zoo() {
        let Some(truth) = &m.references.map else { continue };
        let residual = certify_optimality(&*m.potential, truth, 1.0).unwrap();
        assert!(residual < 1e-8, "{}: {residual}", m.name);
    }
}

#[test]
fn results_are_reproducible() {
    for m in zoo() {
        let a = solve_map(&m, &SolverConfig::default()).unwrap();
        let b = solve_map(&m, &SolverConfig::default()).unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert_eq!(a.iterations, b.iterations);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gaussian_map_is_the_mean(mu in prop::collection::vec(-10.0f64..10.0, 3), v in 0.05f64..20.0) {
        let m = make_model("gaussian", &ModelParams::new().with("mu", mu.clone()).with("var", vec![v, 1.0, 1.0 / v])).unwrap();
        let r = solve_map(&m, &SolverConfig::default()).unwrap();
        prop_assert!(linalg::dist(&r.estimate, &mu) <= 1e-6);
    }

    #[test]
    fn lasso_map_is_soft_thresholding(y in -5.0f64..5.0, lambda in 0.0f64..3.0) {
        let m = make_model("lasso_1d", &ModelParams::new().with("y", y).with("lambda", lambda)).unwrap();
        let expect = y.signum() * (y.abs() - lambda).max(0.0);
        for method in [Method::ProximalGradient, Method::Fista] {
            let r = solve_map(&m, &SolverConfig::with_method(method)).unwrap();
            prop_assert!((r.estimate[0] - expect).abs() <= 1e-9);
        }
    }

    #[test]
    fn fixed_steps_below_two_over_l_converge(frac in 0.05f64..1.9) {
        let m = make_model("gaussian", &ModelParams::new().with("var", vec![0.5, 2.0])).unwrap();
        // L = 2
        let config = SolverConfig {
            step: StepSize::Fixed(frac / 2.0),
            init: Some(vec![3.0, -4.0]),
            ..SolverConfig::with_method(Method::ProximalGradient)
        };
        let r = solve_map(&m, &config).unwrap();
        prop_assert!(r.converged);
        prop_assert!(linalg::norm(&r.estimate) <= 1e-6);
    }
}
