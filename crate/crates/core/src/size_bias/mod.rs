//! Size-biased laws and couplings `(W, Wⁱ)` with `E W_i G(W) = λ_i E G(Wⁱ)`.

mod couplers;
mod discrete;
mod verify;

use std::collections::BTreeMap;

pub use couplers::{
    ArgumentModel, FiniteJointIndicators, FunctionSumCoupler, IndependentFiniteArgs,
    IndependentIndicators, IndependentSumCoupler, IndicatorCollectionCoupler, IndicatorModel,
};
pub use discrete::{size_bias_discrete, DiscreteDistribution, IndexPicker};
pub use verify::{
    verify_characterization, CharacterizationEntry, CharacterizationReport, Z_THRESHOLD,
};

use crate::error::Result;
use crate::harness::Stream;

/// One joint draw: `w` from the target law and `wi` from its size-biased
/// version in the requested coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledDraw {
    pub w: Vec<f64>,
    pub wi: Vec<f64>,
}

impl CoupledDraw {
    pub fn diff(&self, j: usize) -> f64 {
        self.wi[j] - self.w[j]
    }
}

/// A coupling of `W` with each `Wⁱ`.
///
/// Implementations are immutable descriptions; all randomness comes from the
/// stream handed to `draw`.
pub trait CoupledPairSampler: Send + Sync {
    fn dim(&self) -> usize;

    /// `λ = E W`.
    fn means(&self) -> Vec<f64>;

    fn draw(&self, coord: usize, rng: &mut Stream) -> Result<CoupledDraw>;

    fn name(&self) -> String {
        String::from("coupler")
    }
}

/// Finite law of a vector: `(value, probability)` atoms.
pub type Law = Vec<(Vec<f64>, f64)>;

/// Couplers whose construction can be enumerated exactly.
pub trait ExactCoupling: CoupledPairSampler {
    /// Law of `W`.
    fn exact_w_law(&self) -> Result<Law>;

    /// Law of `Wⁱ` as produced by the construction.
    fn exact_constructed_law(&self, coord: usize) -> Result<Law>;
}

const KEY_SCALE: f64 = 1e9;

fn key(v: &[f64]) -> Vec<i64> {
    v.iter().map(|x| (x * KEY_SCALE).round() as i64).collect()
}

/// Merges atoms with equal (rounded) values.
pub fn collapse(law: &[(Vec<f64>, f64)]) -> BTreeMap<Vec<i64>, f64> {
    let mut out = BTreeMap::new();
    for (v, p) in law {
        *out.entry(key(v)).or_insert(0.0) += p;
    }
    out
}

/// The coordinate-`i` size-biased law `w_i dF(w) / λ_i`.
pub fn size_bias_law(law: &[(Vec<f64>, f64)], coord: usize) -> Result<Law> {
    let lambda: f64 = law.iter().map(|(v, p)| v[coord] * p).sum();
    if !(lambda > 0.0) {
        return Err(crate::error::Error::ZeroMean);
    }
    Ok(law
        .iter()
        .filter(|(v, p)| v[coord] * p > 0.0)
        .map(|(v, p)| (v.clone(), v[coord] * p / lambda))
        .collect())
}

/// Largest pointwise probability difference between two finite laws.
pub fn law_distance(a: &[(Vec<f64>, f64)], b: &[(Vec<f64>, f64)]) -> f64 {
    let (ca, cb) = (collapse(a), collapse(b));
    let mut worst: f64 = 0.0;
    for (k, pa) in &ca {
        worst = worst.max((pa - cb.get(k).copied().unwrap_or(0.0)).abs());
    }
    for (k, pb) in &cb {
        if !ca.contains_key(k) {
            worst = worst.max(pb.abs());
        }
    }
    worst
}

/// `max_i law_distance(constructed law of Wⁱ, w_i dF/λ_i)`.
pub fn exact_law_discrepancy<S: ExactCoupling + ?Sized>(s: &S) -> Result<f64> {
    let base = s.exact_w_law()?;
    let mut worst: f64 = 0.0;
    for i in 0..s.dim() {
        let target = size_bias_law(&base, i)?;
        let built = s.exact_constructed_law(i)?;
        worst = worst.max(law_distance(&built, &target));
    }
    Ok(worst)
}

/// Exact law of a sum of independent finite components (by convolution).
pub fn product_outcomes(components: &[DiscreteDistribution]) -> Vec<(Vec<f64>, f64)> {
    let mut out: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for c in components {
        let mut next = Vec::with_capacity(out.len() * c.support().len());
        for (v, p) in &out {
            for &(x, q) in c.support() {
                if q > 0.0 {
                    let mut w = v.clone();
                    w.push(x);
                    next.push((w, p * q));
                }
            }
        }
        out = next;
    }
    out
}
