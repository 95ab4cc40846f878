//! Seeded, mergeable Monte Carlo estimation.
//!
//! Work is split into fixed-size chunks. Chunk `k` draws from its own ChaCha
//! stream `(seed, k)`, chunk results are collected in chunk order and folded
//! left to right, so a run is bit-for-bit reproducible for a fixed seed and
//! chunk size no matter how many workers execute it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{whiten_one, SymMatrix};
use crate::test_functions::SmoothTestFunction;

/// Environment variable capping the worker count. Affects speed only.
pub const THREADS_ENV: &str = "STEIN_LAB_THREADS";

pub const DEFAULT_CHUNK_SIZE: u64 = 4096;

/// Random stream handed to Monte Carlo tasks.
pub type Stream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub seed: u64,
    pub chunk_size: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl StreamConfig {
    pub fn new(seed: u64) -> Self {
        StreamConfig {
            seed,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }

    pub fn with_chunk_size(mut self, chunk_size: u64) -> Self {
        self.chunk_size = chunk_size.max(1);
        self
    }

    /// Independent configuration for a labelled sub-task (pilot runs,
    /// separate estimators sharing one master seed).
    pub fn derive(&self, label: u64) -> Self {
        StreamConfig {
            seed: splitmix64(self.seed ^ splitmix64(label)),
            chunk_size: self.chunk_size,
        }
    }

    /// Stream for chunk `index`.
    pub fn stream(&self, index: u64) -> Stream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    pub fn chunk_count(&self, samples: u64) -> u64 {
        samples.div_ceil(self.chunk_size)
    }
}

/// Worker count: `STEIN_LAB_THREADS` if set, else the machine's parallelism.
pub fn worker_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Running `count, Σx, Σx²` per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accumulator {
    pub count: u64,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl Accumulator {
    pub fn new(dim: usize) -> Self {
        Accumulator {
            count: 0,
            sum: vec![0.0; dim],
            sum_sq: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.sum.len()
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.sum.len());
        self.count += 1;
        for ((s, q), v) in self.sum.iter_mut().zip(self.sum_sq.iter_mut()).zip(x) {
            *s += v;
            *q += v * v;
        }
    }

    /// Merges `other` into `self`. An empty accumulator of any dimension is
    /// the identity.
    pub fn merge(&mut self, other: &Accumulator) {
        if other.count == 0 && other.dim() == 0 {
            return;
        }
        if self.count == 0 && self.dim() == 0 {
            *self = other.clone();
            return;
        }
        assert_eq!(self.dim(), other.dim(), "merging accumulators of different dimension");
        self.count += other.count;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
    }

    pub fn mean(&self, k: usize) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        self.sum[k] / self.count as f64
    }

    /// Unbiased sample variance `(Σx² − (Σx)²/n)/(n − 1)`, clamped at 0.
    pub fn variance(&self, k: usize) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        ((self.sum_sq[k] - self.sum[k] * self.sum[k] / n) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn stderr(&self, k: usize) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance(k) / self.count as f64).sqrt()
    }
}

/// Runs `task(chunk_index, chunk_len, stream)` for every chunk and returns
/// the results in chunk order.
pub fn parallel_chunks<T, F>(samples: u64, cfg: &StreamConfig, task: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64, &mut Stream) -> T + Sync + Send,
{
    run_chunks(samples, cfg, worker_count(), task)
}

/// [`parallel_chunks`] with an explicit worker count.
pub fn run_chunks<T, F>(samples: u64, cfg: &StreamConfig, workers: usize, task: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64, &mut Stream) -> T + Sync + Send,
{
    let chunks = cfg.chunk_count(samples);
    let run = |k: u64| {
        let len = cfg.chunk_size.min(samples - k * cfg.chunk_size);
        let mut rng = cfg.stream(k);
        task(k, len, &mut rng)
    };
    if workers <= 1 || chunks <= 1 {
        return (0..chunks).map(run).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..chunks).into_par_iter().map(run).collect()),
        Err(_) => (0..chunks).map(run).collect(),
    }
}

/// Folds per-chunk accumulators in chunk order.
pub fn merge_in_order<'a, I: IntoIterator<Item = &'a Accumulator>>(parts: I) -> Accumulator {
    let mut total = Accumulator::new(0);
    for part in parts {
        total.merge(part);
    }
    total
}

/// Per-sample Monte Carlo: calls `per_sample(stream, acc)` `samples` times
/// across chunks and merges the chunk accumulators canonically.
pub fn parallel_mc<F>(samples: u64, dim: usize, cfg: &StreamConfig, per_sample: F) -> Accumulator
where
    F: Fn(&mut Stream, &mut Accumulator) + Sync + Send,
{
    parallel_mc_with_workers(samples, dim, cfg, worker_count(), per_sample)
}

pub fn parallel_mc_with_workers<F>(
    samples: u64,
    dim: usize,
    cfg: &StreamConfig,
    workers: usize,
    per_sample: F,
) -> Accumulator
where
    F: Fn(&mut Stream, &mut Accumulator) + Sync + Send,
{
    let parts = run_chunks(samples, cfg, workers, |_, len, rng| {
        let mut acc = Accumulator::new(dim);
        for _ in 0..len {
            per_sample(rng, &mut acc);
        }
        acc
    });
    let mut total = Accumulator::new(dim);
    for part in &parts {
        total.merge(part);
    }
    total
}

/// [`parallel_mc`] for fallible samples; the first error in chunk order wins.
pub fn try_parallel_mc<F>(samples: u64, dim: usize, cfg: &StreamConfig, per_sample: F) -> Result<Accumulator>
where
    F: Fn(&mut Stream, &mut Accumulator) -> Result<()> + Sync + Send,
{
    let parts = parallel_chunks(samples, cfg, |_, len, rng| {
        let mut acc = Accumulator::new(dim);
        for _ in 0..len {
            per_sample(rng, &mut acc)?;
        }
        Ok(acc)
    });
    let mut total = Accumulator::new(dim);
    for part in parts {
        total.merge(&part?);
    }
    Ok(total)
}

/// `|Ê h(Σ^{-1/2}(W − λ)) − Φh|` and the standard error of `Ê h(..)`.
pub fn estimate_gap<S>(
    sampler: S,
    lambda: &[f64],
    isqrt: &SymMatrix,
    h: &SmoothTestFunction,
    phi: f64,
    samples: u64,
    cfg: &StreamConfig,
) -> Result<(f64, f64)>
where
    S: Fn(&mut Stream) -> Vec<f64> + Sync + Send,
{
    let w0 = vec![0.0; isqrt.dim()];
    // surface dimension errors before spawning work
    whiten_one(&w0, lambda, isqrt)?;
    let acc = parallel_mc(samples, 1, cfg, |rng, acc| {
        let w = sampler(rng);
        let z = whiten_one(&w, lambda, isqrt).expect("dimension checked above");
        acc.push(&[h.eval(&z)]);
    });
    Ok(((acc.mean(0) - phi).abs(), acc.stderr(0)))
}
