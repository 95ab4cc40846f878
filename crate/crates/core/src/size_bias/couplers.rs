use std::sync::Arc;

use rand::Rng;

use super::discrete::{size_bias_discrete, DiscreteDistribution, IndexPicker};
use super::{product_outcomes, CoupledDraw, CoupledPairSampler, ExactCoupling, Law};
use crate::error::{Error, Result};
use crate::harness::Stream;

/// `W = Σ X_j` with independent finite `X_j`: replace `X_I` by an
/// independent draw from its size-biased law.
#[derive(Debug, Clone)]
pub struct IndependentSumCoupler {
    components: Vec<DiscreteDistribution>,
    biased: Vec<Option<DiscreteDistribution>>,
    picker: IndexPicker,
}

impl IndependentSumCoupler {
    pub fn new(components: Vec<DiscreteDistribution>) -> Result<Self> {
        let means: Vec<f64> = components.iter().map(|c| c.mean()).collect();
        let picker = IndexPicker::new(&means)?;
        let biased = components
            .iter()
            .map(|c| if c.mean() > 0.0 { size_bias_discrete(c).ok() } else { None })
            .collect();
        Ok(IndependentSumCoupler {
            components,
            biased,
            picker,
        })
    }

    pub fn components(&self) -> &[DiscreteDistribution] {
        &self.components
    }
}

impl CoupledPairSampler for IndependentSumCoupler {
    fn dim(&self) -> usize {
        1
    }

    fn means(&self) -> Vec<f64> {
        vec![self.components.iter().map(|c| c.mean()).sum()]
    }

    fn draw(&self, coord: usize, rng: &mut Stream) -> Result<CoupledDraw> {
        check_coord(coord, 1)?;
        let x: Vec<f64> = self.components.iter().map(|c| c.sample(rng)).collect();
        let w: f64 = x.iter().sum();
        let i = self.picker.pick(rng);
        let y = self.biased[i]
            .as_ref()
            .ok_or(Error::ConditionalUnavailable(i))?
            .sample(rng);
        Ok(CoupledDraw {
            w: vec![w],
            wi: vec![w - x[i] + y],
        })
    }

    fn name(&self) -> String {
        format!("independent-sum(n={})", self.components.len())
    }
}

impl ExactCoupling for IndependentSumCoupler {
    fn exact_w_law(&self) -> Result<Law> {
        Ok(product_outcomes(&self.components)
            .into_iter()
            .map(|(x, p)| (vec![x.iter().sum()], p))
            .collect())
    }

    fn exact_constructed_law(&self, coord: usize) -> Result<Law> {
        check_coord(coord, 1)?;
        let mut out = Vec::new();
        for (x, p) in product_outcomes(&self.components) {
            let w: f64 = x.iter().sum();
            for (i, &pi) in self.picker.probs().iter().enumerate() {
                if pi == 0.0 {
                    continue;
                }
                let b = self.biased[i].as_ref().ok_or(Error::ConditionalUnavailable(i))?;
                for &(y, q) in b.support() {
                    out.push((vec![w - x[i] + y], p * pi * q));
                }
            }
        }
        Ok(out)
    }
}

fn check_coord(coord: usize, dim: usize) -> Result<()> {
    if coord >= dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: coord,
        });
    }
    Ok(())
}

/// A joint law of `{0,1}`-variates with a way to produce `X^β`, distributed
/// as `X` given `X_β = 1`, coupled to a draw of `X`.
pub trait IndicatorModel: Send + Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn mean(&self, alpha: usize) -> f64;

    fn sample(&self, rng: &mut Stream) -> Vec<u8>;

    fn given_one(&self, beta: usize, x: &[u8], rng: &mut Stream) -> Result<Vec<u8>>;

    /// Exact law of `X` when enumerable.
    fn exact_law(&self) -> Option<Vec<(Vec<u8>, f64)>> {
        None
    }

    /// Exact law of the output of `given_one(beta, x, ·)`.
    fn exact_given_one(&self, _beta: usize, _x: &[u8]) -> Option<Vec<(Vec<u8>, f64)>> {
        None
    }
}

/// Independent indicators: conditioning is irrelevant, so `X^β` only sets
/// `X_β = 1`.
#[derive(Debug, Clone)]
pub struct IndependentIndicators {
    probs: Vec<f64>,
}

impl IndependentIndicators {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        for (idx, &p) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::NonFinite { idx, value: p });
            }
        }
        Ok(IndependentIndicators { probs })
    }
}

impl IndicatorModel for IndependentIndicators {
    fn len(&self) -> usize {
        self.probs.len()
    }

    fn mean(&self, alpha: usize) -> f64 {
        self.probs[alpha]
    }

    fn sample(&self, rng: &mut Stream) -> Vec<u8> {
        self.probs
            .iter()
            .map(|&p| u8::from(rng.random::<f64>() < p))
            .collect()
    }

    fn given_one(&self, beta: usize, x: &[u8], _rng: &mut Stream) -> Result<Vec<u8>> {
        if self.probs[beta] == 0.0 {
            return Err(Error::ConditionalUnavailable(beta));
        }
        let mut y = x.to_vec();
        y[beta] = 1;
        Ok(y)
    }

    fn exact_law(&self) -> Option<Vec<(Vec<u8>, f64)>> {
        if self.probs.len() > 20 {
            return None;
        }
        let comps: Vec<DiscreteDistribution> = self
            .probs
            .iter()
            .map(|&p| DiscreteDistribution::bernoulli(p))
            .collect::<Result<_>>()
            .ok()?;
        Some(
            product_outcomes(&comps)
                .into_iter()
                .map(|(v, p)| (v.iter().map(|&b| b as u8).collect(), p))
                .collect(),
        )
    }

    fn exact_given_one(&self, beta: usize, x: &[u8]) -> Option<Vec<(Vec<u8>, f64)>> {
        let mut y = x.to_vec();
        y[beta] = 1;
        Some(vec![(y, 1.0)])
    }
}

/// An arbitrary joint law on `{0,1}^m` given by its atoms.
///
/// `X^β` keeps `x` when `x_β = 1` and otherwise redraws from the conditional
/// law; the mixture is exactly the conditional law given `X_β = 1`.
#[derive(Debug, Clone)]
pub struct FiniteJointIndicators {
    m: usize,
    atoms: Vec<(Vec<u8>, f64)>,
    picker: IndexPicker,
    conditional: Vec<Option<IndexPicker>>,
}

impl FiniteJointIndicators {
    pub fn new(atoms: Vec<(Vec<u8>, f64)>) -> Result<Self> {
        let m = atoms.first().map(|a| a.0.len()).ok_or(Error::ZeroMass)?;
        for (x, _) in &atoms {
            if x.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: x.len(),
                });
            }
        }
        let probs: Vec<f64> = atoms.iter().map(|a| a.1).collect();
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!("probabilities sum to {total}, not 1")));
        }
        let picker = IndexPicker::new(&probs)?;
        let conditional = (0..m)
            .map(|b| {
                let w: Vec<f64> = atoms.iter().map(|(x, p)| if x[b] == 1 { *p } else { 0.0 }).collect();
                IndexPicker::new(&w).ok()
            })
            .collect();
        Ok(FiniteJointIndicators {
            m,
            atoms,
            picker,
            conditional,
        })
    }

    /// Two exchangeable indicators with `P(X_1 = 1) = p` and `P(1, 1) = q`.
    pub fn exchangeable_pair(p: f64, q: f64) -> Result<Self> {
        Self::new(vec![
            (vec![1, 1], q),
            (vec![1, 0], p - q),
            (vec![0, 1], p - q),
            (vec![0, 0], 1.0 - 2.0 * p + q),
        ])
    }
}

impl IndicatorModel for FiniteJointIndicators {
    fn len(&self) -> usize {
        self.m
    }

    fn mean(&self, alpha: usize) -> f64 {
        self.atoms.iter().filter(|a| a.0[alpha] == 1).map(|a| a.1).sum()
    }

    fn sample(&self, rng: &mut Stream) -> Vec<u8> {
        self.atoms[self.picker.pick(rng)].0.clone()
    }

    fn given_one(&self, beta: usize, x: &[u8], rng: &mut Stream) -> Result<Vec<u8>> {
        let cond = self.conditional[beta]
            .as_ref()
            .ok_or(Error::ConditionalUnavailable(beta))?;
        if x[beta] == 1 {
            return Ok(x.to_vec());
        }
        Ok(self.atoms[cond.pick(rng)].0.clone())
    }

    fn exact_law(&self) -> Option<Vec<(Vec<u8>, f64)>> {
        Some(self.atoms.clone())
    }

    fn exact_given_one(&self, beta: usize, x: &[u8]) -> Option<Vec<(Vec<u8>, f64)>> {
        let cond = self.conditional[beta].as_ref()?;
        if x[beta] == 1 {
            return Some(vec![(x.to_vec(), 1.0)]);
        }
        Some(
            self.atoms
                .iter()
                .zip(cond.probs())
                .filter(|(_, &q)| q > 0.0)
                .map(|((y, _), &q)| (y.clone(), q))
                .collect(),
        )
    }
}

/// `W_j = Σ_{α∈A_j} X_α` for indicators `X`; `Wⁱ` is built from `X^β` with
/// `β ∈ A_i` chosen with probability `E X_β / λ_i`.
pub struct IndicatorCollectionCoupler {
    model: Box<dyn IndicatorModel>,
    sets: Vec<Vec<usize>>,
    pickers: Vec<IndexPicker>,
}

impl IndicatorCollectionCoupler {
    pub fn new(model: Box<dyn IndicatorModel>, sets: Vec<Vec<usize>>) -> Result<Self> {
        let m = model.len();
        let mut pickers = Vec::with_capacity(sets.len());
        for set in &sets {
            if let Some(&bad) = set.iter().find(|&&a| a >= m) {
                return Err(Error::DimensionMismatch { expected: m, got: bad });
            }
            let w: Vec<f64> = set.iter().map(|&a| model.mean(a)).collect();
            pickers.push(IndexPicker::new(&w)?);
        }
        Ok(IndicatorCollectionCoupler {
            model,
            sets,
            pickers,
        })
    }

    /// Uses the first index of each `A_i` deterministically. Only valid for
    /// exchangeable collections.
    pub fn with_fixed_index(mut self) -> Result<Self> {
        self.pickers = self
            .sets
            .iter()
            .map(|s| IndexPicker::fixed(s.len(), 0))
            .collect::<Result<_>>()?;
        Ok(self)
    }

    fn counts(&self, x: &[u8]) -> Vec<f64> {
        self.sets
            .iter()
            .map(|s| s.iter().map(|&a| x[a] as f64).sum())
            .collect()
    }
}

impl CoupledPairSampler for IndicatorCollectionCoupler {
    fn dim(&self) -> usize {
        self.sets.len()
    }

    fn means(&self) -> Vec<f64> {
        self.sets
            .iter()
            .map(|s| s.iter().map(|&a| self.model.mean(a)).sum())
            .collect()
    }

    fn draw(&self, coord: usize, rng: &mut Stream) -> Result<CoupledDraw> {
        check_coord(coord, self.dim())?;
        let x = self.model.sample(rng);
        let beta = self.sets[coord][self.pickers[coord].pick(rng)];
        let xb = self.model.given_one(beta, &x, rng)?;
        Ok(CoupledDraw {
            w: self.counts(&x),
            wi: self.counts(&xb),
        })
    }

    fn name(&self) -> String {
        format!("indicator-collection(m={}, p={})", self.model.len(), self.sets.len())
    }
}

impl ExactCoupling for IndicatorCollectionCoupler {
    fn exact_w_law(&self) -> Result<Law> {
        let law = self
            .model
            .exact_law()
            .ok_or_else(|| Error::TooLarge("indicator law not enumerable".into()))?;
        Ok(law.into_iter().map(|(x, p)| (self.counts(&x), p)).collect())
    }

    fn exact_constructed_law(&self, coord: usize) -> Result<Law> {
        check_coord(coord, self.dim())?;
        let law = self
            .model
            .exact_law()
            .ok_or_else(|| Error::TooLarge("indicator law not enumerable".into()))?;
        let mut out = Vec::new();
        for (x, p) in law {
            for (k, &pb) in self.pickers[coord].probs().iter().enumerate() {
                if pb == 0.0 {
                    continue;
                }
                let beta = self.sets[coord][k];
                let cond = self
                    .model
                    .exact_given_one(beta, &x)
                    .ok_or(Error::ConditionalUnavailable(beta))?;
                for (y, q) in cond {
                    out.push((self.counts(&y), p * pb * q));
                }
            }
        }
        Ok(out)
    }
}

/// Argument vector `U` and summands `ψ_j` for `W = Σ ψ_j(U_j)`.
pub trait ArgumentModel: Send + Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn sample(&self, rng: &mut Stream) -> Result<Vec<f64>>;

    fn psi(&self, j: usize, u: f64) -> f64;

    /// `E ψ_j(U_j)`.
    fn psi_mean(&self, j: usize) -> f64;

    /// A draw from `ψ_j(u) dF_j(u) / E ψ_j(U_j)`.
    fn tilted(&self, j: usize, rng: &mut Stream) -> Result<f64>;

    /// Arguments `Y` with `Y_i = y`, the others distributed as `U` given
    /// `U_i = y`, coupled to `u`.
    fn adjust(&self, u: &[f64], i: usize, y: f64, rng: &mut Stream) -> Result<Vec<f64>>;

    /// `Σ ψ_j(Y_j) − Σ ψ_j(u_j)` for the adjusted arguments; override when
    /// the adjustment touches few coordinates.
    fn delta(&self, u: &[f64], i: usize, y: f64, rng: &mut Stream) -> Result<f64> {
        let v = self.adjust(u, i, y, rng)?;
        Ok((0..u.len()).map(|j| self.psi(j, v[j]) - self.psi(j, u[j])).sum())
    }

    fn name(&self) -> String {
        String::from("arguments")
    }
}

/// A draw of the function-sum construction with its arguments exposed.
#[derive(Debug, Clone)]
pub struct FunctionSumDraw {
    pub u: Vec<f64>,
    pub index: usize,
    pub y: Vec<f64>,
    pub w: f64,
    pub w_star: f64,
}

/// Size-bias coupling for `W = Σ ψ_j(U_j)`.
pub struct FunctionSumCoupler<M> {
    model: M,
    picker: IndexPicker,
}

impl<M: ArgumentModel> FunctionSumCoupler<M> {
    pub fn new(model: M) -> Result<Self> {
        let means: Vec<f64> = (0..model.len()).map(|j| model.psi_mean(j)).collect();
        for (idx, &m) in means.iter().enumerate() {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::NonFinite { idx, value: m });
            }
        }
        let picker = IndexPicker::new(&means)?;
        Ok(FunctionSumCoupler { model, picker })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn picker(&self) -> &IndexPicker {
        &self.picker
    }

    pub fn sum(&self, u: &[f64]) -> f64 {
        u.iter().enumerate().map(|(j, &x)| self.model.psi(j, x)).sum()
    }

    pub fn draw_full(&self, rng: &mut Stream) -> Result<FunctionSumDraw> {
        let u = self.model.sample(rng)?;
        let index = self.picker.pick(rng);
        self.complete(u, index, rng)
    }

    /// Finishes the construction from given arguments and index.
    pub fn complete(&self, u: Vec<f64>, index: usize, rng: &mut Stream) -> Result<FunctionSumDraw> {
        let y_i = self.model.tilted(index, rng)?;
        let y = self.model.adjust(&u, index, y_i, rng)?;
        Ok(FunctionSumDraw {
            w: self.sum(&u),
            w_star: self.sum(&y),
            u,
            index,
            y,
        })
    }
}

impl<M: ArgumentModel> CoupledPairSampler for FunctionSumCoupler<M> {
    fn dim(&self) -> usize {
        1
    }

    fn means(&self) -> Vec<f64> {
        vec![(0..self.model.len()).map(|j| self.model.psi_mean(j)).sum()]
    }

    fn draw(&self, coord: usize, rng: &mut Stream) -> Result<CoupledDraw> {
        check_coord(coord, 1)?;
        let d = self.draw_full(rng)?;
        Ok(CoupledDraw {
            w: vec![d.w],
            wi: vec![d.w_star],
        })
    }

    fn name(&self) -> String {
        format!("function-sum[{}]", self.model.name())
    }
}

pub type PsiFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Independent finite arguments; adjustment leaves the others alone.
#[derive(Clone)]
pub struct IndependentFiniteArgs {
    args: Vec<DiscreteDistribution>,
    psis: Vec<PsiFn>,
    tilted: Vec<Option<DiscreteDistribution>>,
}

impl IndependentFiniteArgs {
    pub fn new(args: Vec<DiscreteDistribution>, psis: Vec<PsiFn>) -> Result<Self> {
        if psis.len() != args.len() {
            return Err(Error::DimensionMismatch {
                expected: args.len(),
                got: psis.len(),
            });
        }
        let mut tilted = Vec::with_capacity(args.len());
        for (d, psi) in args.iter().zip(&psis) {
            let mut w = Vec::with_capacity(d.support().len());
            for &(u, p) in d.support() {
                let v = psi(u);
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::TiltedSamplerFailure(format!("psi({u}) = {v} is not a nonnegative number")));
                }
                w.push((u, v * p));
            }
            tilted.push(DiscreteDistribution::from_weights(w).ok());
        }
        Ok(IndependentFiniteArgs { args, psis, tilted })
    }

    pub fn same_psi(args: Vec<DiscreteDistribution>, psi: PsiFn) -> Result<Self> {
        let n = args.len();
        Self::new(args, vec![psi; n])
    }
}

impl ArgumentModel for IndependentFiniteArgs {
    fn len(&self) -> usize {
        self.args.len()
    }

    fn sample(&self, rng: &mut Stream) -> Result<Vec<f64>> {
        Ok(self.args.iter().map(|d| d.sample(rng)).collect())
    }

    fn psi(&self, j: usize, u: f64) -> f64 {
        (self.psis[j])(u)
    }

    fn psi_mean(&self, j: usize) -> f64 {
        self.args[j].support().iter().map(|&(u, p)| self.psi(j, u) * p).sum()
    }

    fn tilted(&self, j: usize, rng: &mut Stream) -> Result<f64> {
        Ok(self.tilted[j].as_ref().ok_or(Error::ZeroMass)?.sample(rng))
    }

    fn adjust(&self, u: &[f64], i: usize, y: f64, _rng: &mut Stream) -> Result<Vec<f64>> {
        let mut out = u.to_vec();
        out[i] = y;
        Ok(out)
    }

    fn name(&self) -> String {
        format!("independent-finite(n={})", self.args.len())
    }
}

impl ExactCoupling for FunctionSumCoupler<IndependentFiniteArgs> {
    fn exact_w_law(&self) -> Result<Law> {
        Ok(product_outcomes(&self.model.args)
            .into_iter()
            .map(|(u, p)| (vec![self.sum(&u)], p))
            .collect())
    }

    fn exact_constructed_law(&self, coord: usize) -> Result<Law> {
        check_coord(coord, 1)?;
        let mut out = Vec::new();
        for (u, p) in product_outcomes(&self.model.args) {
            for (i, &pi) in self.picker.probs().iter().enumerate() {
                if pi == 0.0 {
                    continue;
                }
                let t = self.model.tilted[i].as_ref().ok_or(Error::ZeroMass)?;
                for &(y, q) in t.support() {
                    let mut v = u.clone();
                    v[i] = y;
                    out.push((vec![self.sum(&v)], p * pi * q));
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::StreamConfig;
    use crate::size_bias::{collapse, exact_law_discrepancy, law_distance, size_bias_law};

    fn bern(p: f64) -> DiscreteDistribution {
        DiscreteDistribution::bernoulli(p).unwrap()
    }

    #[test]
    fn two_fair_coins() {
        let c = IndependentSumCoupler::new(vec![bern(0.5), bern(0.5)]).unwrap();
        let w = collapse(&c.exact_w_law().unwrap());
        assert_eq!(w.values().copied().collect::<Vec<_>>(), vec![0.25, 0.5, 0.25]);
        let star = c.exact_constructed_law(0).unwrap();
        let want = vec![(vec![1.0], 0.5), (vec![2.0], 0.5)];
        assert!(law_distance(&star, &want) < 1e-15);
    }

    #[test]
    fn iid_indicators_bias_to_one_plus_binomial() {
        for n in 1..=4 {
            let p = 0.3;
            let c = IndependentSumCoupler::new(vec![bern(p); n]).unwrap();
            let star = c.exact_constructed_law(0).unwrap();
            let want: Vec<(Vec<f64>, f64)> = (0..n)
                .map(|k| {
                    let binom = (0..k).fold(1.0, |acc, j| acc * (n - 1 - j) as f64 / (j + 1) as f64);
                    (vec![1.0 + k as f64], binom * p.powi(k as i32) * (1.0 - p).powi((n - 1 - k) as i32))
                })
                .collect();
            assert!(law_distance(&star, &want) < 1e-12);
        }
    }

    #[test]
    fn single_component_is_plain_size_bias() {
        let d = DiscreteDistribution::new(vec![(1.0, 0.5), (3.0, 0.5)]).unwrap();
        let c = IndependentSumCoupler::new(vec![d.clone()]).unwrap();
        let b = size_bias_discrete(&d).unwrap();
        let want: Vec<_> = b.support().iter().map(|&(v, p)| (vec![v], p)).collect();
        assert!(law_distance(&c.exact_constructed_law(0).unwrap(), &want) < 1e-15);
    }

    #[test]
    fn independent_indicator_collection_matches_sum_coupler() {
        let probs = vec![0.2, 0.5, 0.7];
        let coll = IndicatorCollectionCoupler::new(
            Box::new(IndependentIndicators::new(probs.clone()).unwrap()),
            vec![vec![0, 1, 2]],
        )
        .unwrap();
        let sum = IndependentSumCoupler::new(probs.iter().map(|&p| bern(p)).collect()).unwrap();
        let d = law_distance(
            &coll.exact_constructed_law(0).unwrap(),
            &sum.exact_constructed_law(0).unwrap(),
        );
        assert!(d < 1e-15);
    }

    #[test]
    fn sure_indicators_never_move() {
        let coll = IndicatorCollectionCoupler::new(
            Box::new(IndependentIndicators::new(vec![1.0, 1.0]).unwrap()),
            vec![vec![0, 1], vec![1]],
        )
        .unwrap();
        let mut rng = StreamConfig::new(1).stream(0);
        for i in 0..2 {
            let d = coll.draw(i, &mut rng).unwrap();
            assert_eq!(d.w, d.wi);
        }
    }

    #[test]
    fn exchangeable_pair_conditional() {
        let (p, q) = (0.4, 0.1);
        let m = FiniteJointIndicators::exchangeable_pair(p, q).unwrap();
        let law = m.exact_given_one(0, &[0, 0]).unwrap();
        let p11: f64 = law.iter().filter(|(y, _)| y == &vec![1, 1]).map(|a| a.1).sum();
        assert!((p11 - q / p).abs() < 1e-15);
        let coll = IndicatorCollectionCoupler::new(Box::new(m), vec![vec![0], vec![0, 1]]).unwrap();
        assert!(exact_law_discrepancy(&coll).unwrap() < 1e-12);
    }

    #[test]
    fn joint_law_enumeration_oracle() {
        // a non-exchangeable, correlated law on three indicators
        let atoms = vec![
            (vec![0, 0, 0], 0.10),
            (vec![1, 0, 0], 0.15),
            (vec![0, 1, 0], 0.05),
            (vec![1, 1, 0], 0.20),
            (vec![0, 0, 1], 0.10),
            (vec![1, 0, 1], 0.05),
            (vec![0, 1, 1], 0.25),
            (vec![1, 1, 1], 0.10),
        ];
        let m = FiniteJointIndicators::new(atoms).unwrap();
        let coll = IndicatorCollectionCoupler::new(Box::new(m), vec![vec![0, 1], vec![1, 2], vec![2]]).unwrap();
        assert!(exact_law_discrepancy(&coll).unwrap() < 1e-12);
    }

    #[test]
    fn function_sums() {
        let psi: PsiFn = Arc::new(|u: f64| u);
        let d = DiscreteDistribution::new(vec![(0.0, 0.2), (1.0, 0.5), (4.0, 0.3)]).unwrap();
        let f = FunctionSumCoupler::new(IndependentFiniteArgs::same_psi(vec![d.clone()], psi).unwrap()).unwrap();
        let want: Vec<_> = size_bias_discrete(&d)
            .unwrap()
            .support()
            .iter()
            .map(|&(v, p)| (vec![v], p))
            .collect();
        assert!(law_distance(&f.exact_constructed_law(0).unwrap(), &want) < 1e-15);

        let sq: PsiFn = Arc::new(|u: f64| (u - 1.0).powi(2));
        let args = vec![d.clone(), bern(0.6), d];
        let f = FunctionSumCoupler::new(IndependentFiniteArgs::same_psi(args, sq).unwrap()).unwrap();
        assert!(exact_law_discrepancy(&f).unwrap() < 1e-12);

        let c: PsiFn = Arc::new(|_| 2.0);
        let f = FunctionSumCoupler::new(IndependentFiniteArgs::same_psi(vec![bern(0.3); 3], c).unwrap()).unwrap();
        let mut rng = StreamConfig::new(4).stream(0);
        let dr = f.draw(0, &mut rng).unwrap();
        assert_eq!((dr.w[0], dr.wi[0]), (6.0, 6.0));
    }

    #[test]
    fn size_bias_law_of_vector() {
        let law = vec![(vec![1.0, 0.0], 0.5), (vec![3.0, 1.0], 0.5)];
        let b = size_bias_law(&law, 0).unwrap();
        assert!((b[0].1 - 0.25).abs() < 1e-15);
        assert!(size_bias_law(&[(vec![0.0], 1.0)], 0).is_err());
    }
}
