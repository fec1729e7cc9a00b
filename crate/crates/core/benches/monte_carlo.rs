//! Sequential vs rayon execution of the Monte Carlo kernels. Both modes
//! produce identical numbers, so only wall time differs.

use bayesgeo::audit::{expected_error_map, tail_audit, AuditConfig};
use bayesgeo::exec::Exec;
use bayesgeo::model::{make_model, ModelParams};
use bayesgeo::sampler::{sample, Algorithm, ChainConfig};
use bayesgeo::solver::StepSize;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn exact_expected_loss(c: &mut Criterion) {
    let model = make_model("laplace_iid", &ModelParams::new().with("n", 100usize)).unwrap();
    let mut group = c.benchmark_group("expected_error_map/laplace_n100");
    group.sample_size(10);
    for samples in [1 << 14, 1 << 17] {
        for (name, exec) in MODES {
            let config = AuditConfig { exec, ..AuditConfig::new(samples, 7) };
            group.bench_with_input(BenchmarkId::new(name, samples), &config, |b, cfg| {
                b.iter(|| black_box(expected_error_map(&model, cfg).unwrap().estimate))
            });
        }
    }
    group.finish();
}

fn tail_sweep(c: &mut Criterion) {
    let params = ModelParams::new();
    let mut group = c.benchmark_group("tail_audit/gaussian");
    group.sample_size(10);
    for (name, exec) in MODES {
        let config = AuditConfig { exec, ..AuditConfig::new(1 << 15, 3) };
        group.bench_function(name, |b| {
            b.iter(|| black_box(tail_audit("gaussian", &params, &[100, 1000], &[0.2, 0.5, 1.0], &config).unwrap().len()))
        });
    }
    group.finish();
}

fn mala_chains(c: &mut Criterion) {
    let model = make_model("quartic", &ModelParams::new().with("n", 10usize)).unwrap();
    let mut group = c.benchmark_group("mala/quartic_n10_8chains");
    group.sample_size(10);
    for (name, exec) in MODES {
        let config = ChainConfig {
            chains: 8,
            step: StepSize::Fixed(0.05),
            exec,
            ..ChainConfig::new(Algorithm::Mala, 80_000, 11)
        };
        group.bench_function(name, |b| b.iter(|| black_box(sample(&model, &config).unwrap().len())));
    }
    group.finish();
}

criterion_group!(benches, exact_expected_loss, tail_sweep, mala_chains);
criterion_main!(benches);
