//! Smooth test functions with certified derivative sup-norms, and `Φh = E h(Z)`.
//!
//! Every built-in bounded kind is a product of one-dimensional factors (the
//! cosine is handled analytically), so a mixed partial over a multi-index
//! `(m_1, .., m_p)` factors into one-dimensional derivatives. The sup-norm of
//! `D^k h` is then the maximum, over compositions of `k`, of products of
//! one-dimensional derivative sups. Those sups are certified by a refining
//! grid search.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{parallel_mc, StreamConfig};
use crate::quadrature::GaussHermite;

/// Largest dimension supported by tensor Gauss-Hermite quadrature.
pub const MAX_TENSOR_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothTestFunction {
    /// `cos(a·w + b)`.
    Cosine { a: Vec<f64>, b: f64 },
    /// `exp(-|w|² / (2 scale²))`.
    GaussianRadial { scale: f64, p: usize },
    /// `Π_i σ(a_i w_i)` with the logistic `σ`.
    ProductLogistic { a: Vec<f64> },
    /// `a·w`. Unbounded; used to check closed forms.
    Linear { a: Vec<f64> },
    /// `w_axis²`. Unbounded; used to check closed forms.
    Square { p: usize, axis: usize },
}

/// Sup-norms of `h` and its first three derivative arrays. Unbounded
/// quantities are `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeNorms {
    pub sup: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl DerivativeNorms {
    pub fn order(&self, k: usize) -> f64 {
        match k {
            0 => self.sup,
            1 => self.d1,
            2 => self.d2,
            3 => self.d3,
            _ => panic!("derivative order {k} not tracked"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum GaussianExpectationConfig {
    GaussHermiteTensor { nodes: usize },
    MonteCarlo { samples: u64, seed: u64 },
}

impl Default for GaussianExpectationConfig {
    fn default() -> Self {
        GaussianExpectationConfig::GaussHermiteTensor { nodes: 40 }
    }
}

impl GaussianExpectationConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::GaussHermiteTensor { nodes } if nodes < 2 => Err(Error::InvalidConfig(
                "Gauss-Hermite needs at least 2 nodes per axis".into(),
            )),
            Self::MonteCarlo { samples, .. } if samples < 1000 => Err(Error::InvalidConfig(
                "Monte Carlo Gaussian expectation needs at least 1000 samples".into(),
            )),
            _ => Ok(()),
        }
    }
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `m`-th derivative of `exp(-x²/2)`.
fn radial_factor(m: usize, x: f64) -> f64 {
    let g = (-0.5 * x * x).exp();
    match m {
        0 => g,
        1 => -x * g,
        2 => (x * x - 1.0) * g,
        3 => (3.0 * x - x * x * x) * g,
        _ => unreachable!(),
    }
}

/// `m`-th derivative of the logistic function.
fn logistic_factor(m: usize, t: f64) -> f64 {
    let s = logistic(t);
    let d = s * (1.0 - s);
    match m {
        0 => s,
        1 => d,
        2 => d * (1.0 - 2.0 * s),
        3 => d * (1.0 - 6.0 * s + 6.0 * s * s),
        _ => unreachable!(),
    }
}

/// Sup of `|f|` on `[-half_width, half_width]`: a 0.01 grid, with each grid
/// local maximum polished by golden-section search. A relative `1e-10` slack
/// is added.
pub fn certified_sup<F: Fn(f64) -> f64>(f: F, half_width: f64) -> f64 {
    let step = 1e-2;
    let n = (2.0 * half_width / step).ceil() as usize;
    let g = |x: f64| f(x).abs();
    let vals: Vec<f64> = (0..=n).map(|k| g(-half_width + k as f64 * step)).collect();
    let mut best = vals.iter().copied().fold(0.0_f64, f64::max);
    // polish every grid-local maximum by golden-section search
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for k in 0..=n {
        let left = if k > 0 { vals[k - 1] } else { f64::NEG_INFINITY };
        let right = if k < n { vals[k + 1] } else { f64::NEG_INFINITY };
        if vals[k] < left || vals[k] < right {
            continue;
        }
        let x = -half_width + k as f64 * step;
        let (mut a, mut b) = (x - step, x + step);
        for _ in 0..60 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if g(c) > g(d) {
                b = d;
            } else {
                a = c;
            }
        }
        best = best.max(g(0.5 * (a + b)));
    }
    best * (1.0 + 1e-10) + 1e-10
}

struct FactorSups {
    radial: [f64; 4],
    logistic: [f64; 4],
}

fn factor_sups() -> &'static FactorSups {
    static SUPS: OnceLock<FactorSups> = OnceLock::new();
    SUPS.get_or_init(|| FactorSups {
        radial: [0, 1, 2, 3].map(|m| certified_sup(|x| radial_factor(m, x), 12.0)),
        // logistic tends to 1 without attaining it
        logistic: [0, 1, 2, 3].map(|m| {
            if m == 0 {
                1.0
            } else {
                certified_sup(|t| logistic_factor(m, t), 40.0)
            }
        }),
    })
}

/// Calls `f` on every composition `(m_1, .., m_p)` of `k` into `p` parts.
fn for_each_composition<F: FnMut(&[usize])>(k: usize, p: usize, f: &mut F) {
    fn rec<F: FnMut(&[usize])>(buf: &mut Vec<usize>, left: usize, parts: usize, f: &mut F) {
        if parts == 1 {
            buf.push(left);
            f(buf);
            buf.pop();
            return;
        }
        for m in 0..=left {
            buf.push(m);
            rec(buf, left - m, parts - 1, f);
            buf.pop();
        }
    }
    let mut buf = Vec::with_capacity(p);
    rec(&mut buf, k, p, f);
}

impl SmoothTestFunction {
    pub fn cosine(a: Vec<f64>, b: f64) -> Self {
        SmoothTestFunction::Cosine { a, b }
    }

    /// The constant function `1`.
    pub fn constant(p: usize) -> Self {
        SmoothTestFunction::Cosine {
            a: vec![0.0; p],
            b: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Cosine { a, .. } | Self::ProductLogistic { a } | Self::Linear { a } => a.len(),
            Self::GaussianRadial { p, .. } | Self::Square { p, .. } => *p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.dim();
        if p == 0 {
            return Err(Error::InvalidConfig("test function dimension must be >= 1".into()));
        }
        match self {
            Self::Cosine { a, b } => {
                if a.iter().chain(std::iter::once(b)).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidConfig("cosine parameters must be finite".into()));
                }
            }
            Self::GaussianRadial { scale, .. } => {
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(Error::InvalidConfig("radial scale must be positive".into()));
                }
            }
            Self::ProductLogistic { a } | Self::Linear { a } => {
                if a.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidConfig("coefficients must be finite".into()));
                }
            }
            Self::Square { p, axis } => {
                if axis >= p {
                    return Err(Error::InvalidConfig(format!("axis {axis} out of range for p = {p}")));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, w: &[f64]) -> f64 {
        debug_assert_eq!(w.len(), self.dim());
        match self {
            Self::Cosine { a, b } => (dot(a, w) + b).cos(),
            Self::GaussianRadial { scale, .. } => {
                let r2: f64 = w.iter().map(|x| x * x).sum();
                (-0.5 * r2 / (scale * scale)).exp()
            }
            Self::ProductLogistic { a } => a.iter().zip(w).map(|(ai, wi)| logistic(ai * wi)).product(),
            Self::Linear { a } => dot(a, w),
            Self::Square { axis, .. } => w[*axis] * w[*axis],
        }
    }

    /// Analytic mixed partial `∂^k h / ∂w_{i_1}..∂w_{i_k}` for the multi-index
    /// `axes`.
    pub fn mixed_partial(&self, w: &[f64], axes: &[usize]) -> f64 {
        let p = self.dim();
        let mut orders = vec![0usize; p];
        for &ax in axes {
            orders[ax] += 1;
        }
        let k = axes.len();
        match self {
            Self::Cosine { a, b } => {
                let phase = dot(a, w) + b;
                let coef: f64 = axes.iter().map(|&i| a[i]).product();
                // d^k/dt^k cos t cycles through -sin, -cos, sin, cos
                let d = match k % 4 {
                    0 => phase.cos(),
                    1 => -phase.sin(),
                    2 => -phase.cos(),
                    _ => phase.sin(),
                };
                coef * d
            }
            Self::GaussianRadial { scale, .. } => orders
                .iter()
                .zip(w)
                .map(|(&m, &x)| radial_factor(m, x / scale) / scale.powi(m as i32))
                .product(),
            Self::ProductLogistic { a } => orders
                .iter()
                .zip(w)
                .zip(a)
                .map(|((&m, &x), &ai)| ai.powi(m as i32) * logistic_factor(m, ai * x))
                .product(),
            Self::Linear { a } => match k {
                0 => dot(a, w),
                1 => a[axes[0]],
                _ => 0.0,
            },
            Self::Square { axis, .. } => {
                if axes.iter().any(|ax| ax != axis) {
                    return 0.0;
                }
                match k {
                    0 => w[*axis] * w[*axis],
                    1 => 2.0 * w[*axis],
                    2 => 2.0,
                    _ => 0.0,
                }
            }
        }
    }

    /// Certified sup-norms `‖h‖, ‖Dh‖, ‖D²h‖, ‖D³h‖`.
    pub fn derivative_norms(&self) -> DerivativeNorms {
        match self {
            Self::Cosine { a, b } => {
                let amax = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let sup = if amax == 0.0 { b.cos().abs() } else { 1.0 };
                DerivativeNorms {
                    sup,
                    d1: amax,
                    d2: amax * amax,
                    d3: amax * amax * amax,
                }
            }
            Self::GaussianRadial { scale, p } => {
                let sups = factor_sups();
                let norm = |k: usize| {
                    let mut best = 0.0_f64;
                    for_each_composition(k, *p, &mut |ms| {
                        best = best.max(ms.iter().map(|&m| sups.radial[m]).product());
                    });
                    best / scale.powi(k as i32)
                };
                DerivativeNorms {
                    sup: 1.0,
                    d1: norm(1),
                    d2: norm(2),
                    d3: norm(3),
                }
            }
            Self::ProductLogistic { a } => {
                let sups = factor_sups();
                let norm = |k: usize| {
                    let mut best = 0.0_f64;
                    for_each_composition(k, a.len(), &mut |ms| {
                        let v: f64 = ms
                            .iter()
                            .zip(a)
                            .map(|(&m, ai)| ai.abs().powi(m as i32) * sups.logistic[m])
                            .product();
                        best = best.max(v);
                    });
                    best
                };
                DerivativeNorms {
                    sup: 1.0,
                    d1: norm(1),
                    d2: norm(2),
                    d3: norm(3),
                }
            }
            Self::Linear { a } => {
                let amax = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                DerivativeNorms {
                    sup: if amax == 0.0 { 0.0 } else { f64::INFINITY },
                    d1: amax,
                    d2: 0.0,
                    d3: 0.0,
                }
            }
            Self::Square { .. } => DerivativeNorms {
                sup: f64::INFINITY,
                d1: f64::INFINITY,
                d2: 2.0,
                d3: 0.0,
            },
        }
    }

    /// Closed-form `Φh`.
    pub fn exact_phi(&self) -> f64 {
        match self {
            Self::Cosine { a, b } => (-0.5 * dot(a, a)).exp() * b.cos(),
            Self::GaussianRadial { scale, p } => {
                let s2 = scale * scale;
                (s2 / (1.0 + s2)).powf(*p as f64 / 2.0)
            }
            // σ(t) + σ(-t) = 1 makes each factor average to 1/2
            Self::ProductLogistic { a } => 0.5f64.powi(a.len() as i32),
            Self::Linear { .. } => 0.0,
            Self::Square { .. } => 1.0,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Φh = E h(Z)` with an error estimate: for tensor Gauss-Hermite the
/// difference against a rule with three quarters of the nodes, for Monte
/// Carlo the standard error.
pub fn phi_h(h: &SmoothTestFunction, cfg: &GaussianExpectationConfig) -> Result<(f64, f64)> {
    cfg.validate()?;
    let p = h.dim();
    match *cfg {
        GaussianExpectationConfig::GaussHermiteTensor { nodes } => {
            if p > MAX_TENSOR_DIM {
                return Err(Error::UnsupportedDimension {
                    p,
                    max: MAX_TENSOR_DIM,
                });
            }
            let full = GaussHermite::new(nodes).expect(p, |z| h.eval(z));
            let coarse_n = (3 * nodes).div_ceil(4).max(1);
            let coarse = GaussHermite::new(coarse_n).expect(p, |z| h.eval(z));
            Ok((full, (full - coarse).abs()))
        }
        GaussianExpectationConfig::MonteCarlo { samples, seed } => {
            let stream = StreamConfig::new(seed);
            let acc = parallel_mc(samples, 1, &stream, |rng, acc| {
                let z: Vec<f64> = (0..p).map(|_| StandardNormal.sample(rng)).collect();
                acc.push(&[h.eval(&z)]);
            });
            Ok((acc.mean(0), acc.stderr(0)))
        }
    }
}

impl fmt::Display for SmoothTestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            Self::Cosine { a, b } => write!(f, "cosine:a={}:b={}", join(a), b),
            Self::GaussianRadial { scale, p } => write!(f, "radial:scale={scale}:p={p}"),
            Self::ProductLogistic { a } => write!(f, "logistic:a={}", join(a)),
            Self::Linear { a } => write!(f, "linear:a={}", join(a)),
            Self::Square { p, axis } => write!(f, "square:p={p}:axis={axis}"),
        }
    }
}

impl FromStr for SmoothTestFunction {
    type Err = Error;

    /// Parses specs like `cosine:a=1,0.5:b=0`, `radial:scale=1:p=2`,
    /// `logistic:a=1,2`, `linear:a=1,0`, `square:p=2:axis=0`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let kind = parts.next().unwrap_or_default().trim();
        let mut a: Option<Vec<f64>> = None;
        let mut b = 0.0;
        let mut scale = 1.0;
        let mut p: Option<usize> = None;
        let mut axis = 0usize;
        for part in parts {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value in '{part}'")))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number '{v}' in test function '{s}'")))
            };
            let int = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad integer '{v}' in test function '{s}'")))
            };
            match key.trim() {
                "a" => a = Some(value.split(',').map(num).collect::<Result<_>>()?),
                "b" => b = num(value)?,
                "scale" => scale = num(value)?,
                "p" => p = Some(int(value)?),
                "axis" => axis = int(value)?,
                other => return Err(Error::Parse(format!("unknown key '{other}' in test function '{s}'"))),
            }
        }
        let need_a = |a: Option<Vec<f64>>| a.ok_or_else(|| Error::Parse(format!("'{s}' needs a=...")));
        let h = match kind {
            "cosine" => Self::Cosine { a: need_a(a)?, b },
            "radial" => Self::GaussianRadial {
                scale,
                p: p.unwrap_or(1),
            },
            "logistic" => Self::ProductLogistic { a: need_a(a)? },
            "linear" => Self::Linear { a: need_a(a)? },
            "square" => Self::Square {
                p: p.unwrap_or(1),
                axis,
            },
            other => return Err(Error::Parse(format!("unknown test function kind '{other}'"))),
        };
        h.validate()?;
        Ok(h)
    }
}
