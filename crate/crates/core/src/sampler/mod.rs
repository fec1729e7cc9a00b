//! Posterior sampling: closed-form recipes where the zoo has them, Langevin
//! chains otherwise.
//!
//! Chains are independent and seeded by `derive_seed(seed, CHAIN_STREAM, c)`;
//! their draws are concatenated in chain order, so a sample set depends only
//! on the model and the configuration.

mod iat;

use log::warn;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use iat::integrated_autocorrelation;

use crate::error::{Error, Result};
use crate::exec::{map_batches, map_items, rng_for, Exec, SimRng};
use crate::linalg;
use crate::model::{self, ModelInstance, NonsmoothKind, Potential};
use crate::solver::{minimize, SolverConfig, StepSize};

const EXACT_STREAM: u64 = 0x5A4D_0001;
const CHAIN_STREAM: u64 = 0x5A4D_0002;

/// Default Moreau parameter for MYULA.
pub const DEFAULT_MOREAU: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Exact,
    Ula,
    Mala,
    Myula,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Exact => "exact",
            Algorithm::Ula => "ula",
            Algorithm::Mala => "mala",
            Algorithm::Myula => "myula",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Algorithm::Exact),
            "ula" => Ok(Algorithm::Ula),
            "mala" => Ok(Algorithm::Mala),
            "myula" => Ok(Algorithm::Myula),
            other => Err(Error::invalid(format!("unknown sampler `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub algorithm: Algorithm,
    pub step: StepSize,
    /// Moreau parameter `λ_M` (MYULA only); defaults to [`DEFAULT_MOREAU`].
    pub lambda: Option<f64>,
    /// Draws discarded at the start of each chain; defaults to 10% of the
    /// chain length for MCMC and 0 for exact sampling.
    pub burn_in: Option<usize>,
    /// Retained draws over all chains.
    pub samples: usize,
    pub chains: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Exact,
            step: StepSize::Auto,
            lambda: None,
            burn_in: None,
            samples: 10_000,
            chains: 4,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

impl ChainConfig {
    pub fn new(algorithm: Algorithm, samples: usize, seed: u64) -> Self {
        Self { algorithm, samples, seed, ..Self::default() }
    }
}

/// Row-major `N × n` draws plus run metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub draws: Vec<f64>,
    pub dim: usize,
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Per-chain discarded draws.
    pub burn_in: usize,
    /// Retained draws per chain, in chain order; one entry for exact sampling.
    pub chain_lengths: Vec<usize>,
    /// Step size used by the chain; `None` for exact sampling.
    pub step: Option<f64>,
    pub acceptance_rate: Option<f64>,
    /// MALA accepted fewer than 1% of proposals.
    pub low_acceptance: bool,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.draws.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn draw(&self, i: usize) -> &[f64] {
        &self.draws[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks_exact(self.dim)
    }

    /// Whether draws are autocorrelated (any MCMC algorithm).
    pub fn is_mcmc(&self) -> bool {
        self.algorithm != Algorithm::Exact
    }
}

pub fn sample(model: &ModelInstance, config: &ChainConfig) -> Result<SampleSet> {
    if config.samples == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    let n = model.dim();
    if config.algorithm == Algorithm::Exact {
        let sampler = model.exact_sampler()?.clone();
        let parts = map_batches(config.exec, config.samples, config.seed, EXACT_STREAM, |rng, len| {
            let mut block = vec![0.0; len * n];
            for row in block.chunks_exact_mut(n) {
                sampler.draw(rng, row);
            }
            block
        });
        let burn_in = config.burn_in.unwrap_or(0);
        let mut draws = parts.concat();
        draws.drain(..(burn_in * n).min(draws.len()));
        if draws.is_empty() {
            return Err(Error::invalid("burn-in discards every draw"));
        }
        return Ok(SampleSet {
            chain_lengths: vec![draws.len() / n],
            draws,
            dim: n,
            algorithm: Algorithm::Exact,
            seed: config.seed,
            burn_in,
            step: None,
            acceptance_rate: None,
            low_acceptance: false,
        });
    }

    if config.chains == 0 {
        return Err(Error::invalid("chain count must be positive"));
    }
    let kernel = Kernel::new(&*model.potential, config)?;
    let lengths: Vec<usize> = (0..config.chains)
        .map(|c| config.samples / config.chains + usize::from(c < config.samples % config.chains))
        .filter(|&len| len > 0)
        .collect();
    let burn_in = config.burn_in.unwrap_or(lengths[0] / 10);
    let start = chain_start(&*model.potential);
    let p = &*model.potential;
    let runs = map_items(config.exec, lengths.iter().copied().enumerate().collect(), |(c, len)| {
        let mut rng = rng_for(config.seed, CHAIN_STREAM, c as u64);
        kernel.run(p, &start, burn_in, len, &mut rng)
    });
    let mut draws = Vec::with_capacity(config.samples * n);
    let mut accepted = 0usize;
    let mut proposed = 0usize;
    for run in runs {
        let run = run?;
        draws.extend_from_slice(&run.draws);
        accepted += run.accepted;
        proposed += run.proposed;
    }
    let acceptance_rate = (config.algorithm == Algorithm::Mala).then(|| accepted as f64 / proposed.max(1) as f64);
    let low_acceptance = acceptance_rate.is_some_and(|a| a < 0.01);
    if low_acceptance {
        warn!("MALA acceptance rate {:.4} is below 1%; the step is too large", acceptance_rate.unwrap_or(0.0));
    }
    Ok(SampleSet {
        draws,
        dim: n,
        algorithm: config.algorithm,
        seed: config.seed,
        burn_in,
        chain_lengths: lengths,
        step: Some(kernel.step),
        acceptance_rate,
        low_acceptance,
    })
}

/// Coordinate-wise mean and Monte Carlo standard error. For MCMC draws the
/// variance is inflated by the integrated autocorrelation time, averaged over
/// chains.
pub fn posterior_mean(samples: &SampleSet) -> Result<(Vec<f64>, Vec<f64>)> {
    let total = samples.len();
    if total < 2 {
        return Err(Error::invalid("posterior_mean needs at least two draws"));
    }
    let n = samples.dim;
    let mut mean = vec![0.0; n];
    for row in samples.rows() {
        linalg::axpy(1.0, row, &mut mean);
    }
    mean.iter_mut().for_each(|m| *m /= total as f64);
    let mut var = vec![0.0; n];
    for row in samples.rows() {
        for i in 0..n {
            var[i] += (row[i] - mean[i]).powi(2);
        }
    }
    var.iter_mut().for_each(|v| *v /= (total - 1) as f64);

    let mut tau = vec![1.0; n];
    if samples.is_mcmc() {
        let mut series = Vec::new();
        for i in 0..n {
            let mut weighted = 0.0;
            let mut offset = 0;
            for &len in &samples.chain_lengths {
                series.clear();
                series.extend((offset..offset + len).map(|r| samples.draws[r * n + i]));
                weighted += len as f64 * integrated_autocorrelation(&series);
                offset += len;
            }
            tau[i] = (weighted / total as f64).max(1.0);
        }
    }
    let se = var.iter().zip(&tau).map(|(v, t)| (v * t / total as f64).sqrt()).collect();
    Ok((mean, se))
}

/// MAP point when the solver finds one quickly; otherwise the domain centre.
fn chain_start(p: &dyn Potential) -> Vec<f64> {
    let config = SolverConfig { max_iter: 2_000, tol: 1e-8, ..SolverConfig::default() };
    match minimize(p, &config) {
        Ok(r) if r.estimate.iter().all(|v| v.is_finite()) && p.domain().contains(&r.estimate) => r.estimate,
        _ => {
            let mut x = vec![0.0; p.dim()];
            let centre = p.domain().center(p.dim());
            p.domain().project(&centre, &mut x);
            x
        }
    }
}

struct ChainRun {
    draws: Vec<f64>,
    accepted: usize,
    proposed: usize,
}

struct Kernel {
    algorithm: Algorithm,
    step: f64,
    lambda: f64,
    project: bool,
}

impl Kernel {
    fn new(p: &dyn Potential, config: &ChainConfig) -> Result<Self> {
        let c = p.convexity();
        let kind = p.nonsmooth_kind();
        let lambda = config.lambda.unwrap_or(DEFAULT_MOREAU);
        let auto = match config.algorithm {
            Algorithm::Ula | Algorithm::Mala => {
                if kind == NonsmoothKind::General {
                    return Err(Error::unsupported(format!(
                        "{} needs a gradient; use myula for non-smooth potentials",
                        config.algorithm.as_str()
                    )));
                }
                1.0 / (c.lipschitz + c.strong)
            }
            Algorithm::Myula => {
                if kind == NonsmoothKind::None {
                    return Err(Error::unsupported("myula needs a non-smooth part with a prox"));
                }
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::invalid(format!("Moreau parameter must be positive, got {lambda}")));
                }
                1.0 / (c.lipschitz + 1.0 / lambda)
            }
            Algorithm::Exact => unreachable!("exact sampling has no kernel"),
        };
        let step = match config.step {
            StepSize::Fixed(s) if s > 0.0 && s.is_finite() => s,
            StepSize::Fixed(s) => return Err(Error::invalid(format!("step must be positive, got {s}"))),
            StepSize::Auto if auto > 0.0 && auto.is_finite() => auto,
            StepSize::Auto => {
                return Err(Error::invalid(format!(
                    "automatic step 1/(L+m) is undefined (L = {}, m = {}); give an explicit step",
                    c.lipschitz, c.strong
                )))
            }
        };
        Ok(Self {
            algorithm: config.algorithm,
            step,
            lambda,
            project: kind == NonsmoothKind::Indicator,
        })
    }

    fn run(&self, p: &dyn Potential, start: &[f64], burn_in: usize, len: usize, rng: &mut SimRng) -> Result<ChainRun> {
        let n = start.len();
        let mut x = start.to_vec();
        let mut y = vec![0.0; n];
        let mut g = vec![0.0; n];
        let mut gy = vec![0.0; n];
        let mut prox = vec![0.0; n];
        let mut draws = Vec::with_capacity(len * n);
        let mut accepted = 0;
        let noise = (2.0 * self.step).sqrt();
        let delta = self.step;
        let mut fx = model::eval(p, &x)?;
        p.smooth_gradient(&x, &mut g);

        // MALA started at the mode of a high-dimensional target barely moves;
        // the first half of its burn-in uses unadjusted moves, with the drift
        // tamed coordinate-wise so super-linear gradients cannot blow up.
        let warm_up = if self.algorithm == Algorithm::Mala { burn_in / 2 } else { 0 };
        for it in 0..burn_in + len {
            let algorithm = if it < warm_up { Algorithm::Ula } else { self.algorithm };
            match algorithm {
                Algorithm::Ula => {
                    let tame = it < warm_up;
                    for i in 0..n {
                        let z: f64 = rng.sample(StandardNormal);
                        let drift = if tame { delta * g[i] / (1.0 + delta * g[i].abs()) } else { delta * g[i] };
                        y[i] = x[i] - drift + noise * z;
                    }
                    if self.project {
                        p.domain().project(&y, &mut x);
                    } else {
                        std::mem::swap(&mut x, &mut y);
                    }
                    p.smooth_gradient(&x, &mut g);
                    if it + 1 == warm_up {
                        fx = model::eval(p, &x)?;
                    }
                }
                Algorithm::Myula => {
                    p.nonsmooth_prox(&x, self.lambda, &mut prox)?;
                    for i in 0..n {
                        let z: f64 = rng.sample(StandardNormal);
                        y[i] = x[i] - delta * g[i] - delta / self.lambda * (x[i] - prox[i]) + noise * z;
                    }
                    std::mem::swap(&mut x, &mut y);
                    p.smooth_gradient(&x, &mut g);
                }
                Algorithm::Mala => {
                    for i in 0..n {
                        let z: f64 = rng.sample(StandardNormal);
                        y[i] = x[i] - delta * g[i] + noise * z;
                    }
                    let u: f64 = rng.random();
                    let fy = model::eval(p, &y)?;
                    if fy.is_finite() {
                        p.smooth_gradient(&y, &mut gy);
                        let mut forward = 0.0;
                        let mut backward = 0.0;
                        for i in 0..n {
                            forward += (y[i] - x[i] + delta * g[i]).powi(2);
                            backward += (x[i] - y[i] + delta * gy[i]).powi(2);
                        }
                        let log_ratio = fx - fy + (forward - backward) / (4.0 * delta);
                        if u.ln() < log_ratio {
                            std::mem::swap(&mut x, &mut y);
                            std::mem::swap(&mut g, &mut gy);
                            fx = fy;
                            if it >= burn_in {
                                accepted += 1;
                            }
                        }
                    }
                }
                Algorithm::Exact => unreachable!(),
            }
            if it >= burn_in {
                draws.extend_from_slice(&x);
            }
        }
        if draws.iter().any(|v| !v.is_finite()) {
            return Err(Error::Convergence { iterations: burn_in + len, residual: f64::INFINITY });
        }
        Ok(ChainRun { draws, accepted, proposed: len })
    }
}
