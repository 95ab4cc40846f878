use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PROB_TOL: f64 = 1e-12;

/// Finite law on nonnegative values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    support: Vec<(f64, f64)>,
    #[serde(skip)]
    cum: Vec<f64>,
}

impl DiscreteDistribution {
    /// `support` lists `(value, prob)`; probabilities must sum to 1 within
    /// `1e-12` and values must be nonnegative. Probabilities are renormalized
    /// to remove the residual rounding.
    pub fn new(support: Vec<(f64, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::ZeroMass);
        }
        for (idx, &(v, p)) in support.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::NonFinite { idx, value: v });
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::NonFinite { idx, value: p });
            }
        }
        let total: f64 = support.iter().map(|s| s.1).sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidConfig(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self::normalized(support))
    }

    /// Builds from unnormalized nonnegative weights.
    pub fn from_weights(support: Vec<(f64, f64)>) -> Result<Self> {
        let total: f64 = support.iter().map(|s| s.1).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::ZeroMass);
        }
        Self::new(support.into_iter().map(|(v, w)| (v, w / total)).collect())
    }

    fn normalized(support: Vec<(f64, f64)>) -> Self {
        let total: f64 = support.iter().map(|s| s.1).sum();
        let support: Vec<(f64, f64)> = support.into_iter().map(|(v, p)| (v, p / total)).collect();
        let mut acc = 0.0;
        let mut cum: Vec<f64> = support
            .iter()
            .map(|s| {
                acc += s.1;
                acc
            })
            .collect();
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        DiscreteDistribution { support, cum }
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(vec![(0.0, 1.0 - p), (1.0, p)])
    }

    pub fn point(v: f64) -> Result<Self> {
        Self::new(vec![(v, 1.0)])
    }

    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().map(|(v, p)| v * p).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.support.iter().map(|(v, p)| v * v * p).sum()
    }

    pub fn prob_of(&self, value: f64) -> f64 {
        self.support.iter().filter(|s| s.0 == value).map(|s| s.1).sum()
    }

    /// Inverse-CDF draw. Cumulative sums are left-closed: a uniform `u`
    /// selects the first atom with `u < F(atom)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let k = self.cum.partition_point(|&c| c <= u);
        self.support[k.min(self.support.len() - 1)].0
    }
}

/// The law `w·p(w)/λ`. Atoms that receive zero mass are dropped.
pub fn size_bias_discrete(d: &DiscreteDistribution) -> Result<DiscreteDistribution> {
    let lambda = d.mean();
    if !(lambda > 0.0) {
        return Err(Error::ZeroMean);
    }
    let support = d
        .support
        .iter()
        .filter(|(v, p)| v * p > 0.0)
        .map(|&(v, p)| (v, v * p / lambda))
        .collect();
    Ok(DiscreteDistribution::normalized(support))
}

/// Chooses an index with probability proportional to its weight.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexPicker {
    probs: Vec<f64>,
    cum: Vec<f64>,
}

impl IndexPicker {
    pub fn new(weights: &[f64]) -> Result<Self> {
        for (idx, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::NonFinite { idx, value: w });
            }
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroMean);
        }
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let mut cum: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        Ok(IndexPicker { probs, cum })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(&vec![1.0; n])
    }

    /// Always picks `k`; the exchangeable shortcut.
    pub fn fixed(n: usize, k: usize) -> Result<Self> {
        let mut w = vec![0.0; n];
        *w.get_mut(k).ok_or(Error::DimensionMismatch { expected: n, got: k })? = 1.0;
        Self::new(&w)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.probs[k]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cum.partition_point(|&c| c <= u).min(self.probs.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::StreamConfig;
    use proptest::prelude::*;

    #[test]
    fn bernoulli_biases_to_a_point_mass() {
        let b = size_bias_discrete(&DiscreteDistribution::bernoulli(0.3).unwrap()).unwrap();
        assert_eq!(b.support(), &[(1.0, 1.0)]);
    }

    #[test]
    fn two_point_example() {
        let d = DiscreteDistribution::new(vec![(1.0, 0.5), (3.0, 0.5)]).unwrap();
        let b = size_bias_discrete(&d).unwrap();
        assert!((b.prob_of(1.0) - 0.25).abs() < 1e-15);
        assert!((b.prob_of(3.0) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn truncated_poisson_shifts() {
        let (lam, kmax) = (2.5_f64, 30);
        let pmf = |k: usize| (-lam).exp() * lam.powi(k as i32) / (1..=k).map(|i| i as f64).product::<f64>();
        let d = DiscreteDistribution::from_weights((0..=kmax).map(|k| (k as f64, pmf(k))).collect()).unwrap();
        let b = size_bias_discrete(&d).unwrap();
        let z: f64 = (1..=kmax).map(|k| pmf(k - 1)).sum();
        for k in 1..=kmax {
            assert!((b.prob_of(k as f64) - pmf(k - 1) / z).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_mean_is_rejected() {
        let d = DiscreteDistribution::point(0.0).unwrap();
        assert_eq!(size_bias_discrete(&d), Err(Error::ZeroMean));
        assert!(DiscreteDistribution::new(vec![(1.0, 0.5)]).is_err());
        assert!(DiscreteDistribution::new(vec![(-1.0, 1.0)]).is_err());
    }

    #[test]
    fn left_closed_sampling() {
        let d = DiscreteDistribution::new(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap();
        // u = 0.5 exactly lands on the second atom
        assert_eq!(d.cum.partition_point(|&c| c <= 0.5), 1);
        let mut rng = StreamConfig::new(3).stream(0);
        let n = 200_000;
        let ones = (0..n).filter(|_| d.sample(&mut rng) == 1.0).count() as f64 / n as f64;
        assert!((ones - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn picker_probabilities() {
        let p = IndexPicker::new(&[1.0, 3.0, 0.0]).unwrap();
        assert_eq!(p.probs(), &[0.25, 0.75, 0.0]);
        let mut rng = StreamConfig::new(9).stream(0);
        assert!((0..10_000).all(|_| p.pick(&mut rng) != 2));
        let f = IndexPicker::fixed(3, 1).unwrap();
        assert!((0..100).all(|_| f.pick(&mut rng) == 1));
    }

    fn arb_law() -> impl Strategy<Value = DiscreteDistribution> {
        prop::collection::vec((0.0f64..20.0, 0.01f64..1.0), 1..8)
            .prop_map(|v| DiscreteDistribution::from_weights(v).unwrap())
    }

    proptest! {
        #[test]
        fn biased_law_is_normalized_with_mean_ratio(d in arb_law()) {
            prop_assume!(d.mean() > 1e-6);
            let b = size_bias_discrete(&d).unwrap();
            let total: f64 = b.support().iter().map(|s| s.1).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            let want = d.second_moment() / d.mean();
            prop_assert!((b.mean() - want).abs() <= 1e-12 * want.max(1.0));
        }
    }
}
