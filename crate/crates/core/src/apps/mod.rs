//! The three applications: degree counts in random graphs, monochromatic
//! edges under random colorings, and sums of nonlinear functions.

pub mod color;
pub mod degree;
pub mod nonlinear;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bounds::BoundReport;
use crate::error::{Error, Result};
use crate::harness::{StreamConfig, DEFAULT_CHUNK_SIZE};
use crate::linalg::SymMatrix;

/// Monte Carlo settings shared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    pub chunk_size: u64,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        McConfig {
            samples,
            seed,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }

    pub fn streams(&self) -> StreamConfig {
        StreamConfig::new(self.seed).with_chunk_size(self.chunk_size)
    }

    pub fn validate(&self, min_samples: u64) -> Result<()> {
        if self.samples < min_samples {
            return Err(Error::InvalidConfig(format!(
                "need at least {min_samples} samples, got {}",
                self.samples
            )));
        }
        if self.chunk_size == 0 {
            return Err(Error::InvalidConfig("chunk size must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of one experiment: moments, the certified bound and the
/// empirical distance it must dominate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: Value,
    pub lambda: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    pub isqrt_max_abs: f64,
    pub bound: BoundReport,
    pub gap: f64,
    pub gap_stderr: f64,
    /// `gap ≤ bound + 3·stderr`.
    pub pass: bool,
    pub seed: u64,
    /// Extra diagnostics specific to the experiment.
    #[serde(default)]
    pub diagnostics: Value,
    /// Seconds; only filled in on request so reports stay byte-reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

pub const PASS_SIGMAS: f64 = 3.0;

pub fn passes(gap: f64, bound: f64, stderr: f64) -> bool {
    gap <= bound + PASS_SIGMAS * stderr
}

/// `p x p` rows of a symmetric matrix.
pub fn rows(m: &SymMatrix) -> Vec<Vec<f64>> {
    m.rows()
}

/// Variance of a column from raw power sums (`x`, `x²`, `x³`, `x⁴` means)
/// and the standard error of that variance estimate.
pub(crate) fn variance_with_stderr(n: u64, m1: f64, m2: f64, m3: f64, m4: f64) -> (f64, f64) {
    if n < 2 {
        return (0.0, 0.0);
    }
    let nf = n as f64;
    let var = ((m2 - m1 * m1) * nf / (nf - 1.0)).max(0.0);
    let c4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
    let pop = (m2 - m1 * m1).max(0.0);
    let se = ((c4 - pop * pop).max(0.0) / nf).sqrt();
    (var, se)
}

/// `ln C(m, k)`.
pub(crate) fn ln_choose(m: u64, k: u64) -> f64 {
    if k > m {
        return f64::NEG_INFINITY;
    }
    let k = k.min(m - k);
    (1..=k).map(|t| (((m - k + t) as f64) / t as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_choose_small() {
        assert!((ln_choose(5, 2).exp() - 10.0).abs() < 1e-12);
        assert_eq!(ln_choose(3, 0), 0.0);
        assert_eq!(ln_choose(3, 4), f64::NEG_INFINITY);
    }

    #[test]
    fn variance_from_power_sums() {
        // data {0, 2}: mean 1, population variance 1, kurtosis term 1
        let (v, se) = variance_with_stderr(2, 1.0, 2.0, 4.0, 8.0);
        assert!((v - 2.0).abs() < 1e-15);
        assert_eq!(se, 0.0);
    }
}
