use serde::Serialize;

use super::CoupledPairSampler;
use crate::error::Result;
use crate::harness::{try_parallel_mc, StreamConfig};

/// Validation passes when every standardized difference is within this.
pub const Z_THRESHOLD: f64 = 4.0;

const PILOT_DRAWS: u64 = 20_000;
const PILOT_LABEL: u64 = 0x6d65_6469_616e;

#[derive(Debug, Clone, Serialize)]
pub struct CharacterizationEntry {
    pub coord: usize,
    pub g: String,
    /// `Ê W_i G(W)`.
    pub lhs: f64,
    /// `λ_i Ê G(Wⁱ)`.
    pub rhs: f64,
    pub stderr: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacterizationReport {
    pub sampler: String,
    pub samples: u64,
    pub seed: u64,
    pub median: f64,
    pub entries: Vec<CharacterizationEntry>,
    pub max_abs_z: f64,
    pub pass: bool,
}

enum TestG {
    Coord(usize),
    Square(usize),
    ExpNegSum,
    BelowMedian(f64),
}

impl TestG {
    fn eval(&self, w: &[f64]) -> f64 {
        match *self {
            TestG::Coord(j) => w[j],
            TestG::Square(j) => w[j] * w[j],
            TestG::ExpNegSum => (-w.iter().sum::<f64>()).exp(),
            TestG::BelowMedian(m) => f64::from(u8::from(w.iter().sum::<f64>() <= m)),
        }
    }

    fn label(&self) -> String {
        match *self {
            TestG::Coord(j) => format!("w{j}"),
            TestG::Square(j) => format!("w{j}^2"),
            TestG::ExpNegSum => "exp(-sum w)".into(),
            TestG::BelowMedian(m) => format!("1{{sum w <= {m}}}"),
        }
    }
}

fn standardized(mean: f64, se: f64, scale: f64) -> f64 {
    if se > 0.0 {
        mean / se
    } else if mean.abs() <= 1e-12 * scale.max(1.0) {
        0.0
    } else {
        f64::INFINITY * mean.signum()
    }
}

/// Standardized differences `(Ê W_i G(W) − λ_i Ê G(Wⁱ)) / stderr` over the
/// default suite `w_j`, `w_j²`, `e^{−Σw}`, `1{Σw ≤ median}` for every
/// coordinate `i`. The median comes from a pilot run on a derived stream.
pub fn verify_characterization<S: CoupledPairSampler + ?Sized>(
    s: &S,
    samples: u64,
    cfg: &StreamConfig,
) -> Result<CharacterizationReport> {
    let p = s.dim();
    let lambda = s.means();

    let pilot_cfg = cfg.derive(PILOT_LABEL);
    let mut sums = Vec::with_capacity(PILOT_DRAWS as usize);
    let mut rng = pilot_cfg.stream(0);
    for _ in 0..PILOT_DRAWS {
        sums.push(s.draw(0, &mut rng)?.w.iter().sum::<f64>());
    }
    sums.sort_by(f64::total_cmp);
    let median = sums[sums.len() / 2];

    let mut suite: Vec<TestG> = Vec::new();
    suite.extend((0..p).map(TestG::Coord));
    suite.extend((0..p).map(TestG::Square));
    suite.push(TestG::ExpNegSum);
    suite.push(TestG::BelowMedian(median));
    let ng = suite.len();

    let mut entries = Vec::with_capacity(p * ng);
    for i in 0..p {
        let acc = try_parallel_mc(samples, 3 * ng, &cfg.derive(i as u64), |rng, acc| {
            let d = s.draw(i, rng)?;
            let mut row = Vec::with_capacity(3 * ng);
            for g in &suite {
                let l = d.w[i] * g.eval(&d.w);
                let r = lambda[i] * g.eval(&d.wi);
                row.extend_from_slice(&[l, r, l - r]);
            }
            acc.push(&row);
            Ok(())
        })?;
        for (k, g) in suite.iter().enumerate() {
            let (lhs, rhs) = (acc.mean(3 * k), acc.mean(3 * k + 1));
            let se = acc.stderr(3 * k + 2);
            entries.push(CharacterizationEntry {
                coord: i,
                g: g.label(),
                lhs,
                rhs,
                stderr: se,
                z: standardized(acc.mean(3 * k + 2), se, lhs.abs().max(rhs.abs())),
            });
        }
    }
    let max_abs_z = entries.iter().map(|e| e.z.abs()).fold(0.0, f64::max);
    Ok(CharacterizationReport {
        sampler: s.name(),
        samples,
        seed: cfg.seed,
        median,
        entries,
        max_abs_z,
        pass: max_abs_z <= Z_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Stream;
    use crate::size_bias::{CoupledDraw, DiscreteDistribution, IndependentSumCoupler};

    /// Skips the resampling step, so `Wⁱ = W`.
    struct Broken(IndependentSumCoupler);

    impl CoupledPairSampler for Broken {
        fn dim(&self) -> usize {
            1
        }
        fn means(&self) -> Vec<f64> {
            self.0.means()
        }
        fn draw(&self, _: usize, rng: &mut Stream) -> Result<CoupledDraw> {
            let w: f64 = self.0.components().iter().map(|c| c.sample(rng)).sum();
            Ok(CoupledDraw {
                w: vec![w],
                wi: vec![w],
            })
        }
    }

    fn sum_of_bernoullis(n: usize, p: f64) -> IndependentSumCoupler {
        IndependentSumCoupler::new(vec![DiscreteDistribution::bernoulli(p).unwrap(); n]).unwrap()
    }

    #[test]
    fn single_bernoulli_is_exact() {
        let r = verify_characterization(&sum_of_bernoullis(1, 0.3), 20_000, &StreamConfig::new(5)).unwrap();
        // W* ≡ 1, so every difference is W G(W) − p G(1); still random, but centered
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn sound_coupler_passes() {
        let r = verify_characterization(&sum_of_bernoullis(10, 0.2), 200_000, &StreamConfig::new(6)).unwrap();
        assert!(r.pass, "{r:?}");
        // G(w) = w: the left side is E W² = σ² + λ²
        let e = &r.entries[0];
        assert!((e.lhs - (10.0 * 0.2 * 0.8 + 4.0)).abs() < 0.05);
    }

    #[test]
    fn broken_coupler_fails() {
        let r = verify_characterization(&Broken(sum_of_bernoullis(10, 0.2)), 1_000_000, &StreamConfig::new(7))
            .unwrap();
        assert!(!r.pass);
        assert!(r.max_abs_z > Z_THRESHOLD);
    }
}
