#![allow(dead_code)]

use bayesgeo::exec::rng_for;
use bayesgeo::model::{make_model, ModelInstance, ModelParams};

/// Every zoo model at a small, non-trivial parameterisation.
pub fn zoo() -> Vec<ModelInstance> {
    let specs: Vec<(&str, ModelParams)> = vec![
        ("gaussian", ModelParams::new().with("mu", vec![1.0, -0.5]).with("var", vec![2.0, 0.5])),
        ("gaussian", ModelParams::new().with("cov", vec![vec![2.0, 0.6], vec![0.6, 1.0]])),
        (
            "gaussian_linear",
            ModelParams::new()
                .with("a", vec![vec![1.0, 0.5], vec![0.0, 2.0], vec![1.0, 1.0]])
                .with("y", vec![1.0, -1.0, 0.5])
                .with("noise_var", 0.5),
        ),
        ("laplace_iid", ModelParams::new().with("n", 3usize).with("scale", 0.7)),
        ("lasso_1d", ModelParams::new().with("y", 0.4).with("lambda", 1.5)),
        ("lasso_1d", ModelParams::new()),
        ("quartic", ModelParams::new().with("n", 2usize)),
        ("exp_linear", ModelParams::new().with("n", 2usize)),
        ("exponential_cone", ModelParams::new().with("n", 2usize).with("rate", 1.5)),
        ("truncated_gaussian_box", ModelParams::new().with("mu", vec![1.0, -0.5]).with("upper", vec![3.0, 2.0])),
        ("exp_on_cone", ModelParams::new().with("n", 2usize)),
    ];
    specs.into_iter().map(|(name, params)| make_model(name, &params).unwrap()).collect()
}

/// `count` exact posterior draws, reproducible per `stream`.
pub fn draws(model: &ModelInstance, count: usize, stream: u64) -> Vec<Vec<f64>> {
    let sampler = model.exact_sampler().unwrap();
    let mut rng = rng_for(0xD0C5, stream, 0);
    (0..count)
        .map(|_| {
            let mut x = vec![0.0; model.dim()];
            sampler.draw(&mut rng, &mut x);
            x
        })
        .collect()
}
