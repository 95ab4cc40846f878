//! Numerical solution of the multivariate Stein equation
//! `tr D²g(w) − w·∇g(w) = h(w) − Φh` through the Ornstein–Uhlenbeck
//! representation `g(w) = −∫₀^∞ [T_u h(w) − Φh] du`.
//!
//! With `s = e^{−u}` the integral becomes `−∫₀¹ [E h(ws + √(1−s²)Z) − Φh] ds/s`.
//! A second substitution `s = cos θ` removes the square-root singularity at
//! `s = 1`, so a fixed Gauss–Legendre rule in `θ` converges spectrally. The
//! rule is chosen once per solution; keeping it fixed for all `w` makes `g`
//! a smooth function of `w`, which the finite-difference checks rely on.

use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{GaussHermite, GaussLegendre};
use crate::test_functions::{
    phi_h, GaussianExpectationConfig, SmoothTestFunction, MAX_TENSOR_DIM,
};

pub const DEFAULT_QUAD_TOL: f64 = 1e-8;
const MIN_NODES: usize = 8;
const MAX_NODES: usize = 1024;

/// Finite-difference step for derivatives of order `k`.
pub fn fd_step(k: usize) -> f64 {
    if k >= 3 {
        5e-3
    } else {
        1e-3
    }
}

/// A fixed cubature for `E f(Z)`, `Z ~ N(0, I_p)`: flat points plus weights.
#[derive(Debug, Clone)]
struct GaussianRule {
    p: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussianRule {
    fn new(p: usize, cfg: &GaussianExpectationConfig) -> Result<Self> {
        cfg.validate()?;
        match *cfg {
            GaussianExpectationConfig::GaussHermiteTensor { nodes } => {
                if p > MAX_TENSOR_DIM {
                    return Err(Error::UnsupportedDimension {
                        p,
                        max: MAX_TENSOR_DIM,
                    });
                }
                let gh = GaussHermite::new(nodes);
                let mut points = Vec::new();
                let mut weights = Vec::new();
                gh.expect(p, |z| {
                    points.extend_from_slice(z);
                    0.0
                });
                // recover the tensor weights in the same odometer order
                let mut idx = vec![0usize; p];
                loop {
                    weights.push(idx.iter().map(|&k| gh.weights[k]).product());
                    let mut axis = 0;
                    while axis < p {
                        idx[axis] += 1;
                        if idx[axis] < nodes {
                            break;
                        }
                        idx[axis] = 0;
                        axis += 1;
                    }
                    if axis == p {
                        break;
                    }
                }
                Ok(GaussianRule { p, points, weights })
            }
            GaussianExpectationConfig::MonteCarlo { samples, seed } => {
                // common random numbers: one frozen sample set for every w
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let n = samples as usize;
                let points = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
                Ok(GaussianRule {
                    p,
                    points,
                    weights: vec![1.0 / n as f64; n],
                })
            }
        }
    }

    /// `E h(w·s + c·Z)`.
    fn smooth(&self, h: &SmoothTestFunction, w: &[f64], s: f64, c: f64) -> f64 {
        let mut x = vec![0.0; self.p];
        let mut total = 0.0;
        for (z, wt) in self.points.chunks_exact(self.p.max(1)).zip(&self.weights) {
            for k in 0..self.p {
                x[k] = w[k] * s + c * z[k];
            }
            total += wt * h.eval(&x);
        }
        total
    }
}

/// `(T_u h)(w) = E h(w e^{−u} + √(1 − e^{−2u}) Z)`; `u = ∞` gives `Φh`.
pub fn ou_smoothing(
    h: &SmoothTestFunction,
    w: &[f64],
    u: f64,
    cfg: &GaussianExpectationConfig,
) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::InvalidConfig(format!("smoothing time must be >= 0, got {u}")));
    }
    check_dim(h, w)?;
    if u.is_infinite() {
        return phi_h(h, cfg).map(|(v, _)| v);
    }
    if u == 0.0 {
        return Ok(h.eval(w));
    }
    let s = (-u).exp();
    let rule = GaussianRule::new(h.dim(), cfg)?;
    Ok(rule.smooth(h, w, s, (1.0 - s * s).sqrt()))
}

fn check_dim(h: &SmoothTestFunction, w: &[f64]) -> Result<()> {
    if w.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: w.len(),
        });
    }
    Ok(())
}

/// The solution `g` of the Stein equation for a fixed `h`, with its `s`-rule.
#[derive(Debug, Clone)]
pub struct SteinSolution {
    pub h: SmoothTestFunction,
    pub phi_h: f64,
    /// Nodes `s_k ∈ (0, 1)`.
    pub nodes: Vec<f64>,
    /// Positive weights; `g(w) = −Σ weights[k] (E h(w s_k + ..) − Φh) / s_k`.
    pub weights: Vec<f64>,
    pub inner: GaussianExpectationConfig,
    rule: GaussianRule,
}

fn s_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (theta, gamma) = GaussLegendre::new(n).on_interval(0.0, FRAC_PI_2);
    let nodes = theta.iter().map(|t| t.cos()).collect();
    let weights = theta.iter().zip(&gamma).map(|(t, g)| g * t.sin()).collect();
    (nodes, weights)
}

impl SteinSolution {
    /// Picks the smallest `θ`-rule (doubling from 8 nodes) whose values at a
    /// few probe points change by less than `tol` on the next doubling.
    pub fn new(
        h: &SmoothTestFunction,
        inner: GaussianExpectationConfig,
        tol: f64,
    ) -> Result<Self> {
        h.validate()?;
        let p = h.dim();
        let rule = GaussianRule::new(p, &inner)?;
        // Φh from the same cubature keeps the u → ∞ limit consistent
        let phi = rule.smooth(h, &vec![0.0; p], 0.0, 1.0);
        let probes: Vec<Vec<f64>> = vec![vec![0.0; p], vec![2.0; p], (0..p)
            .map(|k| if k % 2 == 0 { -1.5 } else { 0.7 })
            .collect()];
        let mut sol = SteinSolution {
            h: h.clone(),
            phi_h: phi,
            nodes: Vec::new(),
            weights: Vec::new(),
            inner,
            rule,
        };
        let mut n = MIN_NODES;
        (sol.nodes, sol.weights) = s_rule(n);
        let mut prev: Vec<f64> = probes.iter().map(|w| sol.g(w)).collect();
        loop {
            let next_n = 2 * n;
            let (nodes, weights) = s_rule(next_n);
            let cand = SteinSolution {
                nodes,
                weights,
                ..sol.clone()
            };
            let cur: Vec<f64> = probes.iter().map(|w| cand.g(w)).collect();
            let change = prev
                .iter()
                .zip(&cur)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if change < tol {
                return Ok(cand);
            }
            if next_n >= MAX_NODES {
                return Err(Error::QuadratureNotConverged {
                    change,
                    tol,
                    nodes: next_n,
                });
            }
            sol = cand;
            prev = cur;
            n = next_n;
        }
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// `g(w)`; `w` must have the dimension of `h`.
    pub fn g(&self, w: &[f64]) -> f64 {
        let mut total = 0.0;
        for (&s, &wt) in self.nodes.iter().zip(&self.weights) {
            let t = self.rule.smooth(&self.h, w, s, (1.0 - s * s).sqrt());
            total += wt * (t - self.phi_h) / s;
        }
        -total
    }

    /// Nested central difference for the mixed partial over `axes`.
    pub fn fd_partial(&self, w: &[f64], axes: &[usize], step: f64) -> f64 {
        match axes.split_first() {
            None => self.g(w),
            Some((&ax, rest)) => {
                let mut up = w.to_vec();
                let mut dn = w.to_vec();
                up[ax] += step;
                dn[ax] -= step;
                (self.fd_partial(&up, rest, step) - self.fd_partial(&dn, rest, step))
                    / (2.0 * step)
            }
        }
    }

    /// `|tr D²g(w) − w·∇g(w) − (h(w) − Φh)|` with central differences.
    pub fn pde_residual(&self, w: &[f64], step: f64) -> Result<f64> {
        check_dim(&self.h, w)?;
        let g0 = self.g(w);
        let mut lap = 0.0;
        let mut drift = 0.0;
        let mut x = w.to_vec();
        for k in 0..w.len() {
            x[k] = w[k] + step;
            let up = self.g(&x);
            x[k] = w[k] - step;
            let dn = self.g(&x);
            x[k] = w[k];
            lap += (up - 2.0 * g0 + dn) / (step * step);
            drift += w[k] * (up - dn) / (2.0 * step);
        }
        Ok((lap - drift - (self.h.eval(w) - self.phi_h)).abs())
    }

    /// Largest `|∂^k g| − ‖D^k h‖/k` over the grid and all order-`k` mixed
    /// partials; nonpositive when the derivative bound holds.
    pub fn derivative_bound_check(&self, grid: &[Vec<f64>], k: usize) -> Result<f64> {
        if !(1..=3).contains(&k) {
            return Err(Error::InvalidConfig(format!("derivative order must be 1..3, got {k}")));
        }
        for w in grid {
            check_dim(&self.h, w)?;
        }
        let bound = self.h.derivative_norms().order(k) / k as f64;
        let axes = multi_indices(self.dim(), k);
        let step = fd_step(k);
        let worst = grid
            .par_iter()
            .map(|w| {
                axes.iter()
                    .map(|a| self.fd_partial(w, a, step).abs())
                    .fold(0.0, f64::max)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(0.0, f64::max);
        Ok(worst - bound)
    }

    /// Largest PDE residual over the grid.
    pub fn max_residual(&self, grid: &[Vec<f64>], step: f64) -> Result<f64> {
        for w in grid {
            check_dim(&self.h, w)?;
        }
        let r: Vec<f64> = grid
            .par_iter()
            .map(|w| self.pde_residual(w, step).expect("dimension checked"))
            .collect();
        Ok(r.into_iter().fold(0.0, f64::max))
    }
}

/// `g(w)` for a one-off evaluation.
pub fn solve_g(h: &SmoothTestFunction, w: &[f64]) -> Result<f64> {
    check_dim(h, w)?;
    let sol = SteinSolution::new(h, GaussianExpectationConfig::default(), DEFAULT_QUAD_TOL)?;
    Ok(sol.g(w))
}

/// Nondecreasing multi-indices of length `k` over `0..p`.
pub fn multi_indices(p: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for v in &out {
            let start = v.last().copied().unwrap_or(0);
            for i in start..p {
                let mut w = v.clone();
                w.push(i);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

/// Tensor grid with `per_axis` points on `[lo, hi]^p`.
pub fn grid(p: usize, lo: f64, hi: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let ticks: Vec<f64> = (0..per_axis)
        .map(|k| {
            if per_axis == 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * k as f64 / (per_axis - 1) as f64
            }
        })
        .collect();
    let mut out: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..p {
        out = out
            .into_iter()
            .flat_map(|v| {
                ticks.iter().map(move |&t| {
                    let mut w = v.clone();
                    w.push(t);
                    w
                })
            })
            .collect();
    }
    out
}

/// Summary of a full Stein-equation check on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct SteinCheckReport {
    pub h: String,
    pub p: usize,
    pub phi_h: f64,
    pub quadrature_nodes: usize,
    pub grid_points: usize,
    pub max_residual: f64,
    /// Violation for k = 1, 2, 3 (nonpositive means the bound holds).
    pub derivative_violations: [f64; 3],
    pub pass: bool,
}

pub const RESIDUAL_TOL: f64 = 1e-3;
pub const VIOLATION_TOL: f64 = 1e-3;

/// Residual and derivative-bound checks on the `per_axis`-point grid over
/// `[−2, 2]^p`.
pub fn stein_check(
    h: &SmoothTestFunction,
    inner: GaussianExpectationConfig,
    per_axis: usize,
) -> Result<SteinCheckReport> {
    let sol = SteinSolution::new(h, inner, DEFAULT_QUAD_TOL)?;
    let pts = grid(h.dim(), -2.0, 2.0, per_axis);
    let max_residual = sol.max_residual(&pts, fd_step(1))?;
    let mut viol = [0.0; 3];
    for (k, v) in viol.iter_mut().enumerate() {
        *v = sol.derivative_bound_check(&pts, k + 1)?;
    }
    let pass = max_residual <= RESIDUAL_TOL && viol.iter().all(|&v| v <= VIOLATION_TOL);
    Ok(SteinCheckReport {
        h: h.to_string(),
        p: h.dim(),
        phi_h: sol.phi_h,
        quadrature_nodes: sol.nodes.len(),
        grid_points: pts.len(),
        max_residual,
        derivative_violations: viol,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gh() -> GaussianExpectationConfig {
        GaussianExpectationConfig::default()
    }

    #[test]
    fn smoothing_endpoints_and_square() {
        let sq = SmoothTestFunction::Square { p: 1, axis: 0 };
        let v = ou_smoothing(&sq, &[2.0], 2f64.ln(), &gh()).unwrap();
        assert!((v - 1.75).abs() < 1e-12);
        let cos = SmoothTestFunction::cosine(vec![1.0], 0.3);
        assert!((ou_smoothing(&cos, &[0.4], 0.0, &gh()).unwrap() - cos.eval(&[0.4])).abs() < 1e-15);
        let inf = ou_smoothing(&cos, &[0.4], f64::INFINITY, &gh()).unwrap();
        assert!((inf - cos.exact_phi()).abs() < 1e-12);
        assert!(ou_smoothing(&cos, &[0.4], -1.0, &gh()).is_err());
    }

    #[test]
    fn rule_lives_in_the_unit_interval() {
        let sol = SteinSolution::new(&SmoothTestFunction::cosine(vec![1.0], 0.0), gh(), 1e-8).unwrap();
        assert!(sol.nodes.iter().all(|&s| s > 0.0 && s < 1.0));
        assert!(sol.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn closed_forms() {
        let lin = SmoothTestFunction::Linear { a: vec![1.0] };
        let sq = SmoothTestFunction::Square { p: 1, axis: 0 };
        for w in [-2.0, -0.3, 0.0, 1.1, 2.0] {
            assert!((solve_g(&lin, &[w]).unwrap() + w).abs() < 1e-6);
            assert!((solve_g(&sq, &[w]).unwrap() + 0.5 * (w * w - 1.0)).abs() < 1e-6);
        }
        let c = SmoothTestFunction::constant(2);
        assert_eq!(solve_g(&c, &[0.5, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn residuals_vanish_for_closed_forms() {
        let lin = SteinSolution::new(&SmoothTestFunction::Linear { a: vec![1.0] }, gh(), 1e-8).unwrap();
        let sq = SteinSolution::new(&SmoothTestFunction::Square { p: 1, axis: 0 }, gh(), 1e-8).unwrap();
        for w in [-1.0, 0.2, 1.5] {
            assert!(lin.pde_residual(&[w], 1e-3).unwrap() < 1e-6);
            assert!(sq.pde_residual(&[w], 1e-3).unwrap() < 1e-6);
        }
        let c = SteinSolution::new(&SmoothTestFunction::constant(1), gh(), 1e-8).unwrap();
        assert!(c.pde_residual(&[0.3], 1e-3).unwrap() < 1e-14);
    }

    #[test]
    fn square_second_derivative_bound_is_tight() {
        let sq = SteinSolution::new(&SmoothTestFunction::Square { p: 1, axis: 0 }, gh(), 1e-8).unwrap();
        let v = sq.derivative_bound_check(&grid(1, -2.0, 2.0, 9), 2).unwrap();
        assert!(v.abs() < 1e-5, "{v}");
    }

    #[test]
    fn cosine_gradient_bound() {
        let sol = SteinSolution::new(&SmoothTestFunction::cosine(vec![1.0], 0.0), gh(), 1e-8).unwrap();
        let v = sol.derivative_bound_check(&grid(1, -2.0, 2.0, 21), 1).unwrap();
        assert!(v <= 1e-3);
    }

    #[test]
    fn grid_shape() {
        let g = grid(2, -2.0, 2.0, 21);
        assert_eq!(g.len(), 441);
        assert_eq!(g[0], vec![-2.0, -2.0]);
        assert_eq!(g[440], vec![2.0, 2.0]);
        assert_eq!(multi_indices(2, 3).len(), 4);
    }
}
