//! Streaming Monte Carlo moments with deterministic batch merging.

use crate::exec::{map_batches, Exec, SimRng};

/// Running mean and centred second moment of `k` statistics (Welford, merged
/// with Chan's pairwise update).
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    pub fn new(k: usize) -> Self {
        Self { count: 0, mean: vec![0.0; k], m2: vec![0.0; k] }
    }

    pub fn push(&mut self, values: &[f64]) {
        self.count += 1;
        let c = self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(values) {
            let d = v - *m;
            *m += d / c;
            *s += d * (v - *m);
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * nb / n;
            self.m2[i] += other.m2[i] + d * d * na * nb / n;
        }
        self.count += other.count;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> Vec<f64> {
        let denom = (self.count.max(2) - 1) as f64;
        self.m2.iter().map(|s| s / denom).collect()
    }

    /// Standard error of each mean under i.i.d. sampling.
    pub fn std_error(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.variance().iter().map(|v| (v / n).sqrt()).collect()
    }
}

/// Stream `total` draws through `statistic` and return the moments of its
/// `k` outputs. `draw` fills a point; `statistic(point, out)` fills `k` values.
pub fn stream_moments<D, S>(
    exec: Exec,
    total: usize,
    seed: u64,
    stream: u64,
    dim: usize,
    k: usize,
    draw: D,
    statistic: S,
) -> Moments
where
    D: Fn(&mut SimRng, &mut [f64]) + Sync + Send,
    S: Fn(&[f64], &mut [f64]) + Sync + Send,
{
    let parts = map_batches(exec, total, seed, stream, |rng, len| {
        let mut x = vec![0.0; dim];
        let mut out = vec![0.0; k];
        let mut acc = Moments::new(k);
        for _ in 0..len {
            draw(rng, &mut x);
            statistic(&x, &mut out);
            acc.push(&out);
        }
        acc
    });
    let mut total_acc = Moments::new(k);
    for p in &parts {
        total_acc.merge(p);
    }
    total_acc
}
