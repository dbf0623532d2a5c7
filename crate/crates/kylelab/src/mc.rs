//! Deterministic, seed-substreamed Monte Carlo plumbing.
//!
//! Every draw index owns its own ChaCha substream derived from the master
//! seed, so estimates are bit-identical for any worker count and any
//! batching: parallelism only changes who evaluates a substream, never what
//! it produces. Reduction happens in fixed batch order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monte Carlo settings shared by the equilibrium and market estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_draws: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { n_draws: 200_000, seed: 42, antithetic: true }
    }
}

impl McConfig {
    pub fn new(n_draws: usize, seed: u64, antithetic: bool) -> Result<Self> {
        if n_draws < 1000 {
            return Err(Error::Config(format!(
                "n_draws must be at least 1000, got {n_draws}"
            )));
        }
        Ok(Self { n_draws, seed, antithetic })
    }

    pub fn with_draws(self, n_draws: usize) -> Self {
        Self { n_draws, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// RNG for one explicitly indexed substream of a master seed.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn fill_standard_normal(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
}

/// Running mean / standard-error accumulator.
///
/// The sum starts at `-0.0` so a stream whose terms are all IEEE negative
/// zeros (possible when the estimand underflows from below) keeps its sign
/// through accumulation; any positive term restores an ordinary sum.
#[derive(Debug, Clone, Copy)]
pub struct MeanVar {
    n: u64,
    sum: f64,
    sumsq: f64,
}

impl Default for MeanVar {
    fn default() -> Self {
        Self { n: 0, sum: -0.0, sumsq: 0.0 }
    }
}

impl MeanVar {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sumsq += x * x;
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.n += other.n;
        self.sum += other.sum;
        self.sumsq += other.sumsq;
        self
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Sample variance (biased denominator `n`; the draws counts here make
    /// the distinction irrelevant).
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (self.sumsq / self.n as f64 - m * m).max(0.0)
    }

    pub fn se(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Coordinate-wise mean / standard-error accumulator.
#[derive(Debug, Clone)]
pub struct VecMeanVar {
    n: u64,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
}

impl VecMeanVar {
    pub fn new(dim: usize) -> Self {
        Self { n: 0, sum: vec![-0.0; dim], sumsq: vec![0.0; dim] }
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.sum.len());
        self.n += 1;
        for (i, v) in x.iter().enumerate() {
            self.sum[i] += v;
            self.sumsq[i] += v * v;
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.n += other.n;
        for i in 0..self.sum.len() {
            self.sum[i] += other.sum[i];
            self.sumsq[i] += other.sumsq[i];
        }
        self
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> Vec<f64> {
        self.sum.iter().map(|s| s / self.n as f64).collect()
    }

    pub fn se(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.sum
            .iter()
            .zip(&self.sumsq)
            .map(|(s, sq)| {
                let m = s / n;
                ((sq / n - m * m).max(0.0) / n).sqrt()
            })
            .collect()
    }
}

const DRAW_BATCH: u64 = 8192;

/// Accumulators combinable across batches.
pub trait MergeAcc: Sized + Send {
    fn merge_acc(self, other: Self) -> Self;
}

impl MergeAcc for MeanVar {
    fn merge_acc(self, other: Self) -> Self {
        self.merge(other)
    }
}

impl MergeAcc for VecMeanVar {
    fn merge_acc(self, other: Self) -> Self {
        self.merge(other)
    }
}

impl<T: MergeAcc, U: MergeAcc> MergeAcc for (T, U) {
    fn merge_acc(self, other: Self) -> Self {
        (self.0.merge_acc(other.0), self.1.merge_acc(other.1))
    }
}

/// Evaluate `step` once per substream index `0..n_draws` and merge the
/// per-batch accumulators in index order. Batch boundaries are a fixed
/// constant, so the reduction is identical for any worker count.
pub fn parallel_draws<A, I, S>(seed: u64, n_draws: usize, init: I, step: S) -> A
where
    A: MergeAcc,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, &mut ChaCha8Rng, u64) + Sync,
{
    let n = n_draws as u64;
    let n_batches = n.div_ceil(DRAW_BATCH);
    let mut partials: Vec<(u64, A)> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut acc = init();
            let lo = b * DRAW_BATCH;
            let hi = ((b + 1) * DRAW_BATCH).min(n);
            for d in lo..hi {
                let mut rng = substream(seed, d);
                step(&mut acc, &mut rng, d);
            }
            (b, acc)
        })
        .collect();
    partials.sort_by_key(|(b, _)| *b);
    let mut it = partials.into_iter().map(|(_, a)| a);
    let first = it.next().unwrap_or_else(&init);
    it.fold(first, |a, b| a.merge_acc(b))
}
