//! Sums `W = Σ ψ(U_j)` of a nonnegative function of dependent arguments:
//! correlated standard Gaussians, and the occupancy counts of balls thrown
//! into equiprobable cells.

use std::f64::consts::FRAC_2_PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ln_choose, passes, ExperimentReport, McConfig};
use crate::bounds::{bound_thm_univariate_sb, BoundReport, BoundTerm, UnivariateCouplingStats};
use crate::error::{Error, Result};
use crate::harness::{try_parallel_mc, Stream};
use crate::linalg::{cholesky, SymMatrix};
use crate::size_bias::{ArgumentModel, DiscreteDistribution, ExactCoupling, FunctionSumCoupler, Law};
use crate::test_functions::SmoothTestFunction;

/// Named nonnegative functions, scaled so that `E ψ(Z) = 1` for standard
/// normal `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Psi {
    Square,
    Exp,
    Indicator,
    Constant,
}

impl Psi {
    fn scale(self) -> f64 {
        match self {
            Psi::Square | Psi::Constant => 1.0,
            Psi::Exp => (-0.5f64).exp(),
            Psi::Indicator => 2.0,
        }
    }

    pub fn eval(self, u: f64) -> f64 {
        let raw = match self {
            Psi::Square => u * u,
            Psi::Exp => u.exp(),
            Psi::Indicator => f64::from(u8::from(u > 0.0)),
            Psi::Constant => 1.0,
        };
        self.scale() * raw
    }

    /// `Cov(ψ(U), ψ(V))` for standard normals with correlation `ρ`.
    pub fn gaussian_cov(self, rho: f64) -> f64 {
        match self {
            Psi::Square => 2.0 * rho * rho,
            Psi::Exp => rho.exp_m1(),
            Psi::Indicator => FRAC_2_PI * rho.asin(),
            Psi::Constant => 0.0,
        }
    }
}

impl fmt::Display for Psi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Psi::Square => "square",
            Psi::Exp => "exp",
            Psi::Indicator => "indicator",
            Psi::Constant => "constant",
        })
    }
}

impl FromStr for Psi {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "square" => Ok(Psi::Square),
            "exp" => Ok(Psi::Exp),
            "indicator" => Ok(Psi::Indicator),
            "constant" => Ok(Psi::Constant),
            _ => Err(Error::Parse(format!("unknown psi '{s}' (square|exp|indicator|constant)"))),
        }
    }
}

pub const TILT_CELLS: usize = 1 << 16;
pub const TILT_TAIL: f64 = 1e-10;
const TAIL_CELLS: usize = 4096;

fn simpson_cells(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, cells: usize) -> Result<Vec<f64>> {
    let step = (hi - lo) / cells as f64;
    let mut out = Vec::with_capacity(cells);
    let mut fa = f(lo);
    for k in 0..cells {
        let a = lo + k as f64 * step;
        let (fm, fb) = (f(a + 0.5 * step), f(a + step));
        for v in [fa, fm, fb] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::TiltedSamplerFailure(format!("tilted density {v} near u = {a}")));
            }
        }
        out.push(step * (fa + 4.0 * fm + fb) / 6.0);
        fa = fb;
    }
    Ok(out)
}

/// Draws from `ψ(u) φ(u) du / E ψ(Z)` by inverse CDF on a uniform grid of
/// [`TILT_CELLS`] cells, linear within a cell. The grid half-width grows
/// until the mass outside it is below [`TILT_TAIL`] of the total.
#[derive(Debug, Clone)]
pub struct TiltedNormal {
    lo: f64,
    step: f64,
    cdf: Vec<f64>,
}

impl TiltedNormal {
    pub fn new<F: Fn(f64) -> f64>(psi: F) -> Result<Self> {
        let dens = move |u: f64| psi(u) * (-0.5 * u * u).exp();
        let mut half = 8.0;
        loop {
            let inner: f64 = simpson_cells(&dens, -half, half, TILT_CELLS)?.iter().sum();
            let tail: f64 = simpson_cells(&dens, half, 2.0 * half, TAIL_CELLS)?.iter().sum::<f64>()
                + simpson_cells(&dens, -2.0 * half, -half, TAIL_CELLS)?.iter().sum::<f64>();
            if !(inner + tail > 0.0) {
                return Err(Error::ZeroMass);
            }
            if tail <= TILT_TAIL * (inner + tail) {
                break;
            }
            half *= 1.5;
            if half > 64.0 {
                return Err(Error::TiltedSamplerFailure(format!(
                    "tilted mass beyond |u| = {half} is still {tail:e}"
                )));
            }
        }
        let cells = simpson_cells(&dens, -half, half, TILT_CELLS)?;
        let mut cdf = Vec::with_capacity(TILT_CELLS + 1);
        let mut acc = 0.0;
        cdf.push(0.0);
        for c in cells {
            acc += c;
            cdf.push(acc);
        }
        for v in cdf.iter_mut() {
            *v /= acc;
        }
        Ok(TiltedNormal {
            lo: -half,
            step: 2.0 * half / TILT_CELLS as f64,
            cdf,
        })
    }

    pub fn half_width(&self) -> f64 {
        -self.lo
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let t: f64 = rng.random();
        let k = self.cdf.partition_point(|&c| c <= t).clamp(1, self.cdf.len() - 1) - 1;
        let (a, b) = (self.cdf[k], self.cdf[k + 1]);
        let frac = if b > a { (t - a) / (b - a) } else { 0.5 };
        self.lo + (k as f64 + frac) * self.step
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "structure", rename_all = "snake_case")]
pub enum Correlation {
    /// `ρ_ij = ρ` for `0 < |i − j| ≤ width`; `ρ = 0` is the iid case.
    Banded { rho: f64, width: usize },
    Equicorrelated { rho: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSumConfig {
    pub n: usize,
    pub correlation: Correlation,
    pub psi: Psi,
}

impl GaussianSumConfig {
    pub fn iid(n: usize, psi: Psi) -> Self {
        GaussianSumConfig {
            n,
            correlation: Correlation::Banded { rho: 0.0, width: 1 },
            psi,
        }
    }

    pub fn rho(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 1.0;
        }
        match self.correlation {
            Correlation::Banded { rho, width } => {
                if i.abs_diff(j) <= width {
                    rho
                } else {
                    0.0
                }
            }
            Correlation::Equicorrelated { rho } => rho,
        }
    }

    pub fn matrix(&self) -> Result<SymMatrix> {
        let n = self.n;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = self.rho(i, j);
            }
        }
        SymMatrix::new(n, d)
    }

    pub fn is_independent(&self) -> bool {
        self.n == 1 || (0..self.n).all(|i| (0..self.n).all(|j| i == j || self.rho(i, j) == 0.0))
    }

    /// `r = max_{i≠j} |ρ_ij|`.
    pub fn r(&self) -> f64 {
        let mut r = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    r = r.max(self.rho(i, j).abs());
                }
            }
        }
        r
    }

    /// `max_i Σ_j |ρ_ij|`.
    pub fn b_row(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.rho(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `(λ, σ²)` in closed form.
    pub fn moments(&self) -> (f64, f64) {
        let mut var = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                var += self.psi.gaussian_cov(self.rho(i, j));
            }
        }
        (self.n as f64, var)
    }
}

/// Correlated standard Gaussian arguments. Given `Y_I = y` the others are
/// set to `U_j + ρ_{jI}(y − U_I)`.
#[derive(Debug, Clone)]
pub struct GaussianArgs {
    cfg: GaussianSumConfig,
    /// Nonzero Cholesky entries by row.
    chol: Vec<Vec<(usize, f64)>>,
    /// Nonzero off-diagonal correlations by row.
    nbrs: Vec<Vec<(usize, f64)>>,
    tilt: TiltedNormal,
}

impl GaussianArgs {
    pub fn new(cfg: GaussianSumConfig) -> Result<Self> {
        if cfg.n == 0 {
            return Err(Error::InvalidConfig("need n >= 1 arguments".into()));
        }
        let n = cfg.n;
        let l = cholesky(&cfg.matrix()?)?;
        let chol = (0..n)
            .map(|i| (0..=i).filter(|&k| l[i * n + k] != 0.0).map(|k| (k, l[i * n + k])).collect())
            .collect();
        let nbrs = (0..n)
            .map(|i| (0..n).filter(|&j| j != i && cfg.rho(i, j) != 0.0).map(|j| (j, cfg.rho(i, j))).collect())
            .collect();
        let psi = cfg.psi;
        let tilt = TiltedNormal::new(move |u| psi.eval(u))?;
        Ok(GaussianArgs { cfg, chol, nbrs, tilt })
    }

    pub fn config(&self) -> &GaussianSumConfig {
        &self.cfg
    }
}

impl ArgumentModel for GaussianArgs {
    fn len(&self) -> usize {
        self.cfg.n
    }

    fn sample(&self, rng: &mut Stream) -> Result<Vec<f64>> {
        let z: Vec<f64> = (0..self.cfg.n).map(|_| StandardNormal.sample(rng)).collect();
        Ok(self.chol.iter().map(|row| row.iter().map(|&(k, v)| v * z[k]).sum()).collect())
    }

    fn psi(&self, _j: usize, u: f64) -> f64 {
        self.cfg.psi.eval(u)
    }

    fn psi_mean(&self, _j: usize) -> f64 {
        1.0
    }

    fn tilted(&self, _j: usize, rng: &mut Stream) -> Result<f64> {
        Ok(self.tilt.sample(rng))
    }

    fn adjust(&self, u: &[f64], i: usize, y: f64, _rng: &mut Stream) -> Result<Vec<f64>> {
        let mut v = u.to_vec();
        for &(j, rho) in &self.nbrs[i] {
            v[j] = u[j] + rho * (y - u[i]);
        }
        v[i] = y;
        Ok(v)
    }

    fn delta(&self, u: &[f64], i: usize, y: f64, _rng: &mut Stream) -> Result<f64> {
        let psi = self.cfg.psi;
        let mut d = psi.eval(y) - psi.eval(u[i]);
        for &(j, rho) in &self.nbrs[i] {
            d += psi.eval(u[j] + rho * (y - u[i])) - psi.eval(u[j]);
        }
        Ok(d)
    }

    fn name(&self) -> String {
        format!("gaussian(n={}, psi={})", self.cfg.n, self.cfg.psi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialSumConfig {
    /// Cells.
    pub n: usize,
    /// Balls per cell on average; `kn` balls in total.
    pub k: usize,
    pub psi: Psi,
}

impl MultinomialSumConfig {
    pub fn balls(&self) -> usize {
        self.n * self.k
    }

    fn ln_pmf_pair(&self, a: usize, b: usize) -> f64 {
        let (m, n) = (self.balls() as u64, self.n as f64);
        let rest = m - (a + b) as u64;
        let third = if rest == 0 { 0.0 } else { rest as f64 * (1.0 - 2.0 / n).ln() };
        ln_choose(m, a as u64) + ln_choose(m - a as u64, b as u64) + (a + b) as f64 * (1.0 / n).ln() + third
    }

    /// Law of one cell count, `Bin(kn, 1/n)`.
    pub fn cell_law(&self) -> Result<DiscreteDistribution> {
        let (m, n) = (self.balls() as u64, self.n as f64);
        let q = 1.0 / n;
        let w = (0..=m)
            .map(|u| {
                let tail = if m == u { 0.0 } else { (m - u) as f64 * (1.0 - q).ln() };
                (u as f64, (ln_choose(m, u) + u as f64 * q.ln() + tail).exp())
            })
            .collect();
        DiscreteDistribution::from_weights(w)
    }

    /// `(λ, σ²)` by summing over the joint law of two cells.
    pub fn moments(&self) -> Result<(f64, f64)> {
        let law = self.cell_law()?;
        let n = self.n as f64;
        let m1: f64 = law.support().iter().map(|&(u, p)| p * self.psi.eval(u)).sum();
        let m2: f64 = law.support().iter().map(|&(u, p)| p * self.psi.eval(u).powi(2)).sum();
        let mut var = n * (m2 - m1 * m1);
        if self.n > 1 {
            let m = self.balls();
            let mut cross = 0.0;
            for a in 0..=m {
                for b in 0..=(m - a) {
                    cross += self.ln_pmf_pair(a, b).exp() * self.psi.eval(a as f64) * self.psi.eval(b as f64);
                }
            }
            var += n * (n - 1.0) * (cross - m1 * m1);
        }
        Ok((n * m1, var))
    }
}

/// Occupancy counts of `kn` balls in `n` equiprobable cells. Raising a cell
/// to `y` pulls balls chosen uniformly from the other cells; lowering it
/// throws the surplus uniformly into the other cells.
#[derive(Debug, Clone)]
pub struct MultinomialArgs {
    cfg: MultinomialSumConfig,
    mean: f64,
    tilted: DiscreteDistribution,
}

impl MultinomialArgs {
    pub fn new(cfg: MultinomialSumConfig) -> Result<Self> {
        if cfg.n < 2 || cfg.k == 0 {
            return Err(Error::InvalidConfig(format!("need n >= 2 cells and k >= 1, got n={} k={}", cfg.n, cfg.k)));
        }
        let law = cfg.cell_law()?;
        let mean = law.support().iter().map(|&(u, p)| p * cfg.psi.eval(u)).sum();
        let tilted = DiscreteDistribution::from_weights(
            law.support().iter().map(|&(u, p)| (u, p * cfg.psi.eval(u))).collect(),
        )?;
        Ok(MultinomialArgs { cfg, mean, tilted })
    }

    pub fn config(&self) -> &MultinomialSumConfig {
        &self.cfg
    }

    fn adjust_counts(&self, u: &[f64], i: usize, y: f64, rng: &mut Stream) -> Result<Vec<f64>> {
        let m = self.cfg.balls();
        let mut c: Vec<usize> = u.iter().map(|&x| x as usize).collect();
        let target = y as usize;
        if target > m {
            return Err(Error::InfeasibleAdjustment(format!("cell count {target} exceeds {m} balls")));
        }
        let n = c.len();
        while c[i] < target {
            // a uniformly chosen ball outside cell i
            let mut t = rng.random_range(0..m - c[i]);
            let mut j = 0;
            loop {
                if j != i {
                    if t < c[j] {
                        break;
                    }
                    t -= c[j];
                }
                j += 1;
            }
            c[j] -= 1;
            c[i] += 1;
        }
        while c[i] > target {
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            c[j] += 1;
            c[i] -= 1;
        }
        Ok(c.into_iter().map(|x| x as f64).collect())
    }
}

impl ArgumentModel for MultinomialArgs {
    fn len(&self) -> usize {
        self.cfg.n
    }

    fn sample(&self, rng: &mut Stream) -> Result<Vec<f64>> {
        let mut c = vec![0.0; self.cfg.n];
        for _ in 0..self.cfg.balls() {
            c[rng.random_range(0..self.cfg.n)] += 1.0;
        }
        Ok(c)
    }

    fn psi(&self, _j: usize, u: f64) -> f64 {
        self.cfg.psi.eval(u)
    }

    fn psi_mean(&self, _j: usize) -> f64 {
        self.mean
    }

    fn tilted(&self, _j: usize, rng: &mut Stream) -> Result<f64> {
        Ok(self.tilted.sample(rng))
    }

    fn adjust(&self, u: &[f64], i: usize, y: f64, rng: &mut Stream) -> Result<Vec<f64>> {
        self.adjust_counts(u, i, y, rng)
    }

    fn name(&self) -> String {
        format!("multinomial(n={}, k={}, psi={})", self.cfg.n, self.cfg.k, self.cfg.psi)
    }
}

pub const MAX_OCCUPANCY_STATES: usize = 200_000;

/// Vectors of `parts` nonnegative integers summing to `total`, each at most
/// the matching entry of `caps` when given.
fn compositions(total: usize, parts: usize, caps: Option<&[usize]>) -> Vec<Vec<usize>> {
    fn rec(rest: usize, k: usize, caps: Option<&[usize]>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let parts = cur.capacity();
        if k + 1 == parts {
            if caps.is_none_or(|c| rest <= c[k]) {
                cur.push(rest);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        let hi = caps.map_or(rest, |c| rest.min(c[k]));
        for x in 0..=hi {
            cur.push(x);
            rec(rest - x, k + 1, caps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(total, 0, caps, &mut Vec::with_capacity(parts), &mut out);
    out
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|t| (t as f64).ln()).sum()
}

impl FunctionSumCoupler<MultinomialArgs> {
    fn occupancy_law(&self) -> Result<Vec<(Vec<usize>, f64)>> {
        let cfg = self.model().config();
        let (m, n) = (cfg.balls(), cfg.n);
        let states = (0..n.saturating_sub(1)).try_fold(1usize, |acc, t| {
            acc.checked_mul(m + t + 1).map(|v| v / (t + 1))
        });
        if states.is_none_or(|s| s > MAX_OCCUPANCY_STATES) {
            return Err(Error::TooLarge(format!("{m} balls in {n} cells exceed the enumeration limit")));
        }
        let base = ln_factorial(m) - m as f64 * (n as f64).ln();
        Ok(compositions(m, n, None)
            .into_iter()
            .map(|c| {
                let lp = base - c.iter().map(|&x| ln_factorial(x)).sum::<f64>();
                (c, lp.exp())
            })
            .collect())
    }

    fn psi_sum(&self, c: &[usize]) -> f64 {
        c.iter().map(|&x| self.model().config().psi.eval(x as f64)).sum()
    }
}

impl ExactCoupling for FunctionSumCoupler<MultinomialArgs> {
    fn exact_w_law(&self) -> Result<Law> {
        Ok(self
            .occupancy_law()?
            .into_iter()
            .map(|(c, p)| (vec![self.psi_sum(&c)], p))
            .collect())
    }

    /// Enumerates state, cell, tilted count and every ball move: removals
    /// are multivariate hypergeometric, additions multinomial over the
    /// other `n − 1` cells.
    fn exact_constructed_law(&self, coord: usize) -> Result<Law> {
        if coord != 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: coord + 1 });
        }
        let n = self.model().config().n;
        let mut out = Vec::new();
        for (c, pc) in self.occupancy_law()? {
            for i in 0..n {
                let pi = self.picker().prob(i);
                let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                let caps: Vec<usize> = others.iter().map(|&j| c[j]).collect();
                let avail: usize = caps.iter().sum();
                for &(y, q) in self.model().tilted.support() {
                    let y = y as usize;
                    let base = pc * pi * q;
                    if y >= c[i] {
                        let r = y - c[i];
                        let denom = ln_choose(avail as u64, r as u64);
                        for take in compositions(r, n - 1, Some(&caps)) {
                            let lp: f64 = take
                                .iter()
                                .zip(&caps)
                                .map(|(&t, &cap)| ln_choose(cap as u64, t as u64))
                                .sum::<f64>()
                                - denom;
                            let mut v = c.clone();
                            v[i] = y;
                            for (&j, &t) in others.iter().zip(&take) {
                                v[j] -= t;
                            }
                            out.push((vec![self.psi_sum(&v)], base * lp.exp()));
                        }
                    } else {
                        let r = c[i] - y;
                        let lbase = ln_factorial(r) - r as f64 * ((n - 1) as f64).ln();
                        for add in compositions(r, n - 1, None) {
                            let lp = lbase - add.iter().map(|&x| ln_factorial(x)).sum::<f64>();
                            let mut v = c.clone();
                            v[i] = y;
                            for (&j, &t) in others.iter().zip(&add) {
                                v[j] += t;
                            }
                            out.push((vec![self.psi_sum(&v)], base * lp.exp()));
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Argument model selection for the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Gauss { n: usize, correlation: Correlation },
    Multinomial { n: usize, k: usize },
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Gauss { n, correlation } => match correlation {
                Correlation::Banded { rho, width: 1 } => write!(f, "gauss:n={n},rho={rho}"),
                Correlation::Banded { rho, width } => write!(f, "gauss:n={n},rho={rho},band={width}"),
                Correlation::Equicorrelated { rho } => write!(f, "gauss:n={n},rho={rho},equi"),
            },
            ModelSpec::Multinomial { n, k } => write!(f, "multinomial:n={n},k={k}"),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    /// `gauss:n=200,rho=0.1[,band=w|,equi]` or `multinomial:n=100,k=2`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Parse(format!("model '{s}': {why}"));
        let (kind, rest) = s.split_once(':').ok_or_else(|| bad("expected kind:key=value,..."))?;
        let (mut n, mut k, mut rho, mut band, mut equi) = (None, None, 0.0, 1usize, false);
        for item in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            if item == "equi" {
                equi = true;
                continue;
            }
            let (key, v) = item.split_once('=').ok_or_else(|| bad(item))?;
            let int = || v.parse::<usize>().map_err(|_| bad(item));
            match key {
                "n" => n = Some(int()?),
                "k" => k = Some(int()?),
                "band" => band = int()?,
                "rho" => rho = v.parse::<f64>().map_err(|_| bad(item))?,
                _ => return Err(bad(&format!("unknown key '{key}'"))),
            }
        }
        let n = n.ok_or_else(|| bad("missing n"))?;
        match kind {
            "gauss" => Ok(ModelSpec::Gauss {
                n,
                correlation: if equi {
                    Correlation::Equicorrelated { rho }
                } else {
                    Correlation::Banded { rho, width: band }
                },
            }),
            "multinomial" => Ok(ModelSpec::Multinomial {
                n,
                k: k.ok_or_else(|| bad("missing k"))?,
            }),
            _ => Err(bad("kind must be gauss or multinomial")),
        }
    }
}

/// Inner draws per half in the nested estimate of `Var E(W* − W | U)`.
pub const INNER_DRAWS: usize = 32;

/// Outer simulation for `W = Σ ψ(U_j)`. When `var_cond` is not known in
/// closed form it is estimated from two independent inner averages `a`,
/// `b` of `W* − W` given `U`, centered at the exact `E(W* − W) = σ²/λ`:
/// `E (a − μ)(b − μ) = Var E(W* − W | U)` with no inner-noise bias.
fn simulate<M: ArgumentModel>(
    c: &FunctionSumCoupler<M>,
    lambda: f64,
    sigma2: f64,
    exact_var_cond: Option<f64>,
    h: &SmoothTestFunction,
    mc: &McConfig,
) -> Result<(UnivariateCouplingStats, f64, f64)> {
    mc.validate(2)?;
    let sigma = sigma2.sqrt();
    let mu = sigma2 / lambda;
    let nested = exact_var_cond.is_none();
    let acc = try_parallel_mc(mc.samples, 3, &mc.streams(), |rng, acc| {
        let d = c.draw_full(rng)?;
        let diff = d.w_star - d.w;
        let mut cov = 0.0;
        if nested {
            let mut half = [0.0; 2];
            for s in half.iter_mut() {
                for _ in 0..INNER_DRAWS {
                    let i = c.picker().pick(rng);
                    let y = c.model().tilted(i, rng)?;
                    *s += c.model().delta(&d.u, i, y, rng)?;
                }
                *s = *s / INNER_DRAWS as f64 - mu;
            }
            cov = half[0] * half[1];
        }
        acc.push(&[h.eval(&[(d.w - lambda) / sigma]), diff * diff, cov]);
        Ok(())
    })?;
    let (var_cond, var_cond_stderr) = match exact_var_cond {
        Some(v) => (v, 0.0),
        None => (acc.mean(2), acc.stderr(2)),
    };
    let stats = UnivariateCouplingStats {
        lambda,
        sigma2,
        var_cond,
        mean_sq_diff: acc.mean(1),
        var_cond_stderr,
        mean_sq_diff_stderr: acc.stderr(1),
    };
    Ok((stats, (acc.mean(0) - h.exact_phi()).abs(), acc.stderr(0)))
}

fn degenerate_bound(lambda: f64) -> BoundReport {
    let zero = |name: &str| BoundTerm {
        name: name.into(),
        value: 0.0,
        stderr: 0.0,
    };
    BoundReport {
        theorem: "univariate_size_bias".into(),
        terms: vec![zero("conditional_variance"), zero("mean_square_difference")],
        total: 0.0,
        stderr: 0.0,
        seed: None,
        inputs: json!({ "degenerate": true, "lambda": lambda }),
        isqrt_max_abs: None,
        isqrt_spectral: None,
    }
}

/// Univariate size-bias bound for `W = Σ ψ(U_j)` against the empirical gap
/// for the standardized sum. A constant sum has bound and gap 0.
pub fn run_nonlinear_experiment(
    model: &ModelSpec,
    psi: Psi,
    h: &SmoothTestFunction,
    mc: &McConfig,
) -> Result<ExperimentReport> {
    h.validate()?;
    if h.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: h.dim() });
    }
    let norms = h.derivative_norms();
    let (lambda, sigma2, stats, gap, diagnostics) = match *model {
        ModelSpec::Gauss { n, correlation } => {
            let cfg = GaussianSumConfig { n, correlation, psi };
            let (lambda, sigma2) = cfg.moments();
            let diag = json!({ "r": cfg.r(), "b_row": cfg.b_row(), "r_below_third": cfg.r() < 1.0 / 3.0 });
            let exact = cfg.is_independent().then(|| sigma2 / (n * n) as f64);
            let c = FunctionSumCoupler::new(GaussianArgs::new(cfg)?)?;
            if sigma2 <= 0.0 {
                (lambda, sigma2, None, (0.0, 0.0), diag)
            } else {
                let (s, g, se) = simulate(&c, lambda, sigma2, exact, h, mc)?;
                (lambda, sigma2, Some(s), (g, se), diag)
            }
        }
        ModelSpec::Multinomial { n, k } => {
            let cfg = MultinomialSumConfig { n, k, psi };
            let (lambda, sigma2) = cfg.moments()?;
            let c = FunctionSumCoupler::new(MultinomialArgs::new(cfg)?)?;
            let diag = json!({ "balls": n * k, "inner_draws": INNER_DRAWS });
            if sigma2 <= 1e-12 * lambda * lambda {
                (lambda, 0.0, None, (0.0, 0.0), diag)
            } else {
                let (s, g, se) = simulate(&c, lambda, sigma2, None, h, mc)?;
                (lambda, sigma2, Some(s), (g, se), diag)
            }
        }
    };
    let bound = match &stats {
        Some(s) => bound_thm_univariate_sb(s, norms.sup, norms.d1)?,
        None => degenerate_bound(lambda),
    }
    .with_seed(mc.seed);
    let (gap, gap_stderr) = gap;
    Ok(ExperimentReport {
        experiment: "nonlinear".into(),
        config: json!({ "model": model.to_string(), "psi": psi, "h": h.to_string(), "mc": mc }),
        lambda: vec![lambda],
        sigma: vec![vec![sigma2]],
        isqrt_max_abs: if sigma2 > 0.0 { 1.0 / sigma2.sqrt() } else { f64::INFINITY },
        pass: passes(gap, bound.total, gap_stderr),
        bound,
        gap,
        gap_stderr,
        seed: mc.seed,
        diagnostics,
        wall_time_s: None,
    })
}
