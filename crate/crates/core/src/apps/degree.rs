//! Counts of vertices with prescribed degrees in the Erdős–Rényi graph
//! `K_{n,π}`, the vertex-rewiring size-bias coupling and its exact
//! conditional expectation given the graph.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ln_choose, passes, rows, variance_with_stderr, ExperimentReport, McConfig};
use crate::bounds::{bound_thm_multivariate_sb, MultivariateCouplingStats};
use crate::error::{Error, Result};
use crate::harness::{parallel_mc, Stream};
use crate::linalg::{inverse_sqrt, whiten_one, SymMatrix, DEFAULT_PD_TOL};
use crate::size_bias::{CoupledDraw, CoupledPairSampler, ExactCoupling, Law};
use crate::test_functions::SmoothTestFunction;

pub const MAX_BRUTE_FORCE_N: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErdosRenyiConfig {
    pub n: usize,
    pub pi: f64,
    pub degrees: Vec<usize>,
}

impl ErdosRenyiConfig {
    pub fn new(n: usize, pi: f64, degrees: Vec<usize>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig(format!("need n >= 2, got {n}")));
        }
        if !(pi > 0.0 && pi < 1.0) {
            return Err(Error::InvalidConfig(format!("edge probability must lie in (0, 1), got {pi}")));
        }
        if degrees.is_empty() {
            return Err(Error::InvalidConfig("at least one degree is required".into()));
        }
        for (k, &d) in degrees.iter().enumerate() {
            if d > n - 1 {
                return Err(Error::InvalidConfig(format!("degree {d} exceeds n - 1 = {}", n - 1)));
            }
            if degrees[..k].contains(&d) {
                return Err(Error::InvalidConfig(format!("degree {d} listed twice")));
            }
        }
        Ok(ErdosRenyiConfig { n, pi, degrees })
    }

    /// `π = c / (n − 1)`.
    pub fn with_c(n: usize, c: f64, degrees: Vec<usize>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig(format!("need n >= 2, got {n}")));
        }
        Self::new(n, c / (n - 1) as f64, degrees)
    }

    pub fn p(&self) -> usize {
        self.degrees.len()
    }

    pub fn c(&self) -> f64 {
        self.pi * (self.n - 1) as f64
    }
}

/// `λ`, `Σ` and the constant `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeMoments {
    pub lambda: Vec<f64>,
    pub sigma: SymMatrix,
    pub b: f64,
    /// `β(i)`: probability that a fixed vertex has degree `d_i`.
    pub beta: Vec<f64>,
}

/// Closed-form moments without the positive-definiteness check.
pub fn formula_moments(cfg: &ErdosRenyiConfig) -> Result<DegreeMoments> {
    let n = cfg.n as f64;
    let m = (cfg.n - 1) as u64;
    let (pi, c) = (cfg.pi, cfg.c());
    let beta: Vec<f64> = cfg
        .degrees
        .iter()
        .map(|&d| {
            let d = d as u64;
            (ln_choose(m, d) + d as f64 * pi.ln() + (m - d) as f64 * (1.0 - pi).ln()).exp()
        })
        .collect();
    let p = cfg.p();
    let denom = c * (1.0 - c / m as f64);
    let mut data = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            let (di, dj) = (cfg.degrees[i] as f64, cfg.degrees[j] as f64);
            let mut s = n * beta[i] * beta[j] * ((di - c) * (dj - c) / denom - 1.0);
            if i == j {
                s += n * beta[i];
            }
            data[i * p + j] = s;
        }
    }
    let total: f64 = beta.iter().sum();
    let min_beta = beta.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DegreeMoments {
        lambda: beta.iter().map(|b| n * b).collect(),
        sigma: SymMatrix::new(p, data)?,
        b: 1.0 / (min_beta * (1.0 - total)),
        beta,
    })
}

/// [`formula_moments`], failing with `NotPositiveDefinite` when `Σ` cannot
/// be whitened.
pub fn theoretical_moments(cfg: &ErdosRenyiConfig) -> Result<DegreeMoments> {
    let m = formula_moments(cfg)?;
    inverse_sqrt(&m.sigma, DEFAULT_PD_TOL)?;
    Ok(m)
}

/// Simple undirected graph: adjacency lists plus a degree array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSample {
    adj: Vec<Vec<u32>>,
}

impl GraphSample {
    pub fn empty(n: usize) -> Self {
        GraphSample {
            adj: vec![Vec::new(); n],
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for u in 0..n {
            for v in (u + 1)..n {
                g.add_edge(u, v);
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(u, v) in edges {
            if u == v || u >= n || v >= n || g.has_edge(u, v) {
                return Err(Error::InvalidConfig(format!("bad edge ({u}, {v})")));
            }
            g.add_edge(u, v);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(&(v as u32))
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    /// Caller guarantees `u != v` and that the edge is absent.
    pub fn add_edge(&mut self, u: usize, v: usize) {
        self.adj[u].push(v as u32);
        self.adj[v].push(u as u32);
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) {
        self.adj[u].retain(|&x| x as usize != v);
        self.adj[v].retain(|&x| x as usize != u);
    }

    /// No self-loops, no duplicates, symmetric adjacency.
    pub fn is_consistent(&self) -> bool {
        (0..self.n()).all(|u| {
            let a = &self.adj[u];
            a.iter().enumerate().all(|(k, &v)| {
                let v = v as usize;
                v != u && v < self.n() && !a[..k].contains(&(v as u32)) && self.adj[v].contains(&(u as u32))
            })
        })
    }

    pub fn degree_histogram(&self) -> Vec<u32> {
        let mut h = vec![0u32; self.n()];
        for a in &self.adj {
            h[a.len()] += 1;
        }
        h
    }

    /// `W_j = #{v : D(v) = d_j}`.
    pub fn counts(&self, degrees: &[usize]) -> Vec<f64> {
        let h = self.degree_histogram();
        degrees.iter().map(|&d| h[d] as f64).collect()
    }
}

/// Each pair is an edge independently with probability `π`; pairs are
/// visited by geometric skipping.
pub fn sample_graph(cfg: &ErdosRenyiConfig, rng: &mut Stream) -> GraphSample {
    let n = cfg.n;
    let mut g = GraphSample::empty(n);
    let log_q = (1.0 - cfg.pi).ln();
    for u in 0..n {
        let mut v = u;
        loop {
            let r: f64 = 1.0 - rng.random::<f64>();
            let skip = (r.ln() / log_q).floor();
            if skip >= (n - v) as f64 {
                break;
            }
            v += 1 + skip as usize;
            if v >= n {
                break;
            }
            g.add_edge(u, v);
        }
    }
    g
}

/// The random choices of one coupling step.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Rewire {
    v: usize,
    removing: bool,
    targets: Vec<usize>,
}

fn choose_rewire(k: &GraphSample, d_i: usize, rng: &mut Stream) -> Rewire {
    let n = k.n();
    let v = rng.random_range(0..n);
    let dv = k.degree(v);
    if dv > d_i {
        let mut pool: Vec<usize> = k.neighbors(v).iter().map(|&x| x as usize).collect();
        let m = dv - d_i;
        for t in 0..m {
            let s = rng.random_range(t..pool.len());
            pool.swap(t, s);
        }
        pool.truncate(m);
        Rewire {
            v,
            removing: true,
            targets: pool,
        }
    } else if dv < d_i {
        let m = d_i - dv;
        let free = n - 1 - dv;
        let mut targets = Vec::with_capacity(m);
        if free < 4 * m {
            let mut pool: Vec<usize> = (0..n).filter(|&u| u != v && !k.has_edge(v, u)).collect();
            for t in 0..m {
                let s = rng.random_range(t..pool.len());
                pool.swap(t, s);
            }
            pool.truncate(m);
            targets = pool;
        } else {
            while targets.len() < m {
                let u = rng.random_range(0..n);
                if u != v && !k.has_edge(v, u) && !targets.contains(&u) {
                    targets.push(u);
                }
            }
        }
        Rewire {
            v,
            removing: false,
            targets,
        }
    } else {
        Rewire {
            v,
            removing: false,
            targets: Vec::new(),
        }
    }
}

fn rewire_delta(k: &GraphSample, d_i: usize, r: &Rewire, degrees: &[usize]) -> Vec<f64> {
    let mut delta = vec![0.0; degrees.len()];
    let mut bump = |old: usize, new: usize| {
        for (j, &d) in degrees.iter().enumerate() {
            delta[j] += f64::from(u8::from(new == d)) - f64::from(u8::from(old == d));
        }
    };
    bump(k.degree(r.v), d_i);
    for &t in &r.targets {
        let old = k.degree(t);
        bump(old, if r.removing { old - 1 } else { old + 1 });
    }
    delta
}

fn apply_rewire(k: &GraphSample, r: &Rewire) -> GraphSample {
    let mut out = k.clone();
    for &t in &r.targets {
        if r.removing {
            out.remove_edge(r.v, t);
        } else {
            out.add_edge(r.v, t);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeCouplingDraw {
    pub k: GraphSample,
    pub v: usize,
    pub ki: GraphSample,
    pub w: Vec<f64>,
    pub wi: Vec<f64>,
}

/// Picks `V` uniformly and rewires it to degree `d_i`: surplus edges at `V`
/// are removed uniformly, missing ones are added to uniform non-neighbors.
pub fn couple_degree(k: &GraphSample, degrees: &[usize], i: usize, rng: &mut Stream) -> DegreeCouplingDraw {
    let r = choose_rewire(k, degrees[i], rng);
    let ki = apply_rewire(k, &r);
    DegreeCouplingDraw {
        w: k.counts(degrees),
        wi: ki.counts(degrees),
        k: k.clone(),
        v: r.v,
        ki,
    }
}

/// `Wⁱ − W` for one coupling step, without materializing `Kⁱ`. Consumes
/// the stream exactly like [`couple_degree`].
pub fn coupling_delta(k: &GraphSample, degrees: &[usize], i: usize, rng: &mut Stream) -> Vec<f64> {
    let r = choose_rewire(k, degrees[i], rng);
    rewire_delta(k, degrees[i], &r, degrees)
}

/// Exact `E[Wⁱ_j − W_j | K]` for all `(i, j)`: average over `v` of the own
/// change, the expected neighbor losses (weight `(D(v)−d_i)/D(v)`) and the
/// expected non-neighbor gains (weight `(d_i−D(v))/(n−1−D(v))`).
pub fn cond_exp_matrix(k: &GraphSample, degrees: &[usize]) -> Vec<Vec<f64>> {
    let n = k.n();
    let p = degrees.len();
    let hist = k.degree_histogram();
    let at = |d: isize| -> f64 {
        if d < 0 || d as usize >= n {
            0.0
        } else {
            hist[d as usize] as f64
        }
    };
    let mut out = vec![vec![0.0; p]; p];
    // per vertex: neighbor counts at degrees d_j + 1, d_j, d_j − 1
    let mut nb = vec![[0.0f64; 3]; p];
    for v in 0..n {
        let dv = k.degree(v);
        for row in nb.iter_mut() {
            *row = [0.0; 3];
        }
        for &u in k.neighbors(v) {
            let du = k.degree(u as usize) as isize;
            for (j, &d) in degrees.iter().enumerate() {
                let d = d as isize;
                if du == d + 1 {
                    nb[j][0] += 1.0;
                } else if du == d {
                    nb[j][1] += 1.0;
                } else if du == d - 1 {
                    nb[j][2] += 1.0;
                }
            }
        }
        for (i, &di) in degrees.iter().enumerate() {
            for (j, &dj) in degrees.iter().enumerate() {
                let mut e = f64::from(u8::from(di == dj)) - f64::from(u8::from(dv == dj));
                if dv > di {
                    let r = (dv - di) as f64 / dv as f64;
                    e += r * (nb[j][0] - nb[j][1]);
                } else if dv < di {
                    let a = (di - dv) as f64 / (n - 1 - dv) as f64;
                    let dj = dj as isize;
                    let self_lo = f64::from(u8::from(dv as isize == dj - 1));
                    let self_eq = f64::from(u8::from(dv as isize == dj));
                    let gain = at(dj - 1) - nb[j][2] - self_lo;
                    let loss = at(dj) - nb[j][1] - self_eq;
                    e += a * (gain - loss);
                }
                out[i][j] += e;
            }
        }
    }
    for row in out.iter_mut() {
        for x in row.iter_mut() {
            *x /= n as f64;
        }
    }
    out
}

pub fn cond_exp_given_k(k: &GraphSample, degrees: &[usize], i: usize, j: usize) -> f64 {
    cond_exp_matrix(k, degrees)[i][j]
}

fn pair_list(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            v.push((a, b));
        }
    }
    v
}

fn graph_from_mask(n: usize, pairs: &[(usize, usize)], mask: u64) -> GraphSample {
    let mut g = GraphSample::empty(n);
    for (e, &(a, b)) in pairs.iter().enumerate() {
        if mask >> e & 1 == 1 {
            g.add_edge(a, b);
        }
    }
    g
}

/// Every graph on `n ≤ 5` vertices with its probability.
fn all_graphs(cfg: &ErdosRenyiConfig) -> Result<Vec<(GraphSample, f64)>> {
    if cfg.n > MAX_BRUTE_FORCE_N {
        return Err(Error::TooLarge(format!(
            "graph enumeration needs n <= {MAX_BRUTE_FORCE_N}, got {}",
            cfg.n
        )));
    }
    let pairs = pair_list(cfg.n);
    let m = pairs.len();
    Ok((0..1u64 << m)
        .map(|mask| {
            let e = mask.count_ones() as i32;
            let prob = cfg.pi.powi(e) * (1.0 - cfg.pi).powi(m as i32 - e);
            (graph_from_mask(cfg.n, &pairs, mask), prob)
        })
        .collect())
}

/// Exact `(λ, Σ)` by summing over all `2^{C(n,2)}` graphs.
pub fn brute_force_moments(cfg: &ErdosRenyiConfig) -> Result<(Vec<f64>, SymMatrix)> {
    let graphs = all_graphs(cfg)?;
    let p = cfg.p();
    let mut lambda = vec![0.0; p];
    for (g, pr) in &graphs {
        for (l, w) in lambda.iter_mut().zip(g.counts(&cfg.degrees)) {
            *l += pr * w;
        }
    }
    let mut data = vec![0.0; p * p];
    for (g, pr) in &graphs {
        let w = g.counts(&cfg.degrees);
        for i in 0..p {
            for j in 0..p {
                data[i * p + j] += pr * (w[i] - lambda[i]) * (w[j] - lambda[j]);
            }
        }
    }
    Ok((lambda, SymMatrix::new(p, data)?))
}

/// `W` from a fresh `K_{n,π}` coupled with `Wⁱ`.
#[derive(Debug, Clone)]
pub struct DegreeCoupler {
    cfg: ErdosRenyiConfig,
    lambda: Vec<f64>,
}

impl DegreeCoupler {
    pub fn new(cfg: ErdosRenyiConfig) -> Result<Self> {
        let lambda = formula_moments(&cfg)?.lambda;
        Ok(DegreeCoupler { cfg, lambda })
    }
}

impl CoupledPairSampler for DegreeCoupler {
    fn dim(&self) -> usize {
        self.cfg.p()
    }

    fn means(&self) -> Vec<f64> {
        self.lambda.clone()
    }

    fn draw(&self, coord: usize, rng: &mut Stream) -> Result<CoupledDraw> {
        if coord >= self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: coord,
            });
        }
        let k = sample_graph(&self.cfg, rng);
        let w = k.counts(&self.cfg.degrees);
        let delta = coupling_delta(&k, &self.cfg.degrees, coord, rng);
        let wi = w.iter().zip(&delta).map(|(a, b)| a + b).collect();
        Ok(CoupledDraw { w, wi })
    }

    fn name(&self) -> String {
        format!("degree-count(n={}, pi={}, d={:?})", self.cfg.n, self.cfg.pi, self.cfg.degrees)
    }
}

/// All size-`m` subsets of `pool`.
fn subsets(pool: &[usize], m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << pool.len()) {
        if mask.count_ones() as usize == m {
            out.push((0..pool.len()).filter(|&k| mask >> k & 1 == 1).map(|k| pool[k]).collect());
        }
    }
    out
}

impl ExactCoupling for DegreeCoupler {
    fn exact_w_law(&self) -> Result<Law> {
        Ok(all_graphs(&self.cfg)?
            .into_iter()
            .map(|(g, p)| (g.counts(&self.cfg.degrees), p))
            .collect())
    }

    fn exact_constructed_law(&self, coord: usize) -> Result<Law> {
        let n = self.cfg.n;
        let di = self.cfg.degrees[coord];
        let mut out = Vec::new();
        for (g, pg) in all_graphs(&self.cfg)? {
            for v in 0..n {
                let dv = g.degree(v);
                let (removing, pool, m) = if dv > di {
                    (true, g.neighbors(v).iter().map(|&x| x as usize).collect::<Vec<_>>(), dv - di)
                } else {
                    let free: Vec<usize> = (0..n).filter(|&u| u != v && !g.has_edge(v, u)).collect();
                    (false, free, di - dv)
                };
                let subs = subsets(&pool, m);
                let q = 1.0 / (n as f64 * subs.len() as f64);
                for targets in subs {
                    let r = Rewire { v, removing, targets };
                    out.push((apply_rewire(&g, &r).counts(&self.cfg.degrees), pg * q));
                }
            }
        }
        Ok(out)
    }
}

/// `‖Σ^{-1/2}‖` against `n^{-1/2} B^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsqrtCheck {
    pub isqrt_max_abs: f64,
    pub reference: f64,
    pub violated: bool,
}

pub fn isqrt_bound_check(cfg: &ErdosRenyiConfig) -> Result<IsqrtCheck> {
    let m = theoretical_moments(cfg)?;
    let isqrt = inverse_sqrt(&m.sigma, DEFAULT_PD_TOL)?.max_abs();
    let reference = (m.b / cfg.n as f64).sqrt();
    Ok(IsqrtCheck {
        isqrt_max_abs: isqrt,
        reference,
        violated: isqrt > reference,
    })
}

/// Statistics of one Monte Carlo pass over fresh graphs.
#[derive(Debug, Clone)]
pub struct DegreeSimulation {
    pub stats: MultivariateCouplingStats,
    /// `|Ê h(Σ^{-1/2}(W − λ)) − Φh|` with stderr, when `h` was supplied.
    pub gap: Option<(f64, f64)>,
    /// `Ê E[Wⁱ_j − W_j | K]` and `Ê(Wⁱ_j − W_j)` with stderrs, `[i][j]`.
    pub mean_cond: Vec<Vec<(f64, f64)>>,
    pub mean_direct: Vec<Vec<(f64, f64)>>,
}

/// One pass: per graph, the exact conditional expectations, `inner`
/// coupling draws per coordinate, and optionally `h` at the whitened `W`.
pub fn simulate(
    cfg: &ErdosRenyiConfig,
    h: Option<(&SmoothTestFunction, f64)>,
    inner: usize,
    mc: &McConfig,
) -> Result<DegreeSimulation> {
    mc.validate(100)?;
    if inner == 0 {
        return Err(Error::InvalidConfig("need at least one inner coupling draw".into()));
    }
    let moments = theoretical_moments(cfg)?;
    let isqrt = inverse_sqrt(&moments.sigma, DEFAULT_PD_TOL)?;
    let p = cfg.p();
    if let Some((h, _)) = h {
        if h.dim() != p {
            return Err(Error::DimensionMismatch { expected: p, got: h.dim() });
        }
    }
    let degrees = &cfg.degrees;
    // columns: ce powers (4p²) | abs cross (p³) | direct diffs (p²) | h
    let n_ce = 4 * p * p;
    let n_ac = p * p * p;
    let n_dd = p * p;
    let dim = n_ce + n_ac + n_dd + 1;
    let acc = parallel_mc(mc.samples, dim, &mc.streams(), |rng, acc| {
        let k = sample_graph(cfg, rng);
        let w = k.counts(degrees);
        let ce = cond_exp_matrix(&k, degrees);
        let mut row = vec![0.0; dim];
        for i in 0..p {
            for j in 0..p {
                let x = ce[i][j];
                let b = 4 * (i * p + j);
                row[b] = x;
                row[b + 1] = x * x;
                row[b + 2] = x * x * x;
                row[b + 3] = x * x * x * x;
            }
        }
        for i in 0..p {
            for _ in 0..inner {
                let d = coupling_delta(&k, degrees, i, rng);
                for j in 0..p {
                    row[n_ce + n_ac + i * p + j] += d[j] / inner as f64;
                    for l in 0..p {
                        row[n_ce + (i * p + j) * p + l] += (d[j] * d[l]).abs() / inner as f64;
                    }
                }
            }
        }
        if let Some((h, _)) = h {
            let z = whiten_one(&w, &moments.lambda, &isqrt).expect("dimensions checked");
            row[dim - 1] = h.eval(&z);
        }
        acc.push(&row);
    });
    let mut var_cond = vec![vec![0.0; p]; p];
    let mut var_cond_stderr = vec![vec![0.0; p]; p];
    let mut mean_cond = vec![vec![(0.0, 0.0); p]; p];
    let mut mean_direct = vec![vec![(0.0, 0.0); p]; p];
    let mut abs_cross = vec![vec![vec![0.0; p]; p]; p];
    let mut abs_cross_stderr = vec![vec![vec![0.0; p]; p]; p];
    for i in 0..p {
        for j in 0..p {
            let b = 4 * (i * p + j);
            let (v, se) = variance_with_stderr(acc.count, acc.mean(b), acc.mean(b + 1), acc.mean(b + 2), acc.mean(b + 3));
            var_cond[i][j] = v;
            var_cond_stderr[i][j] = se;
            mean_cond[i][j] = (acc.mean(b), acc.stderr(b));
            let c = n_ce + n_ac + i * p + j;
            mean_direct[i][j] = (acc.mean(c), acc.stderr(c));
            for l in 0..p {
                let c = n_ce + (i * p + j) * p + l;
                abs_cross[i][j][l] = acc.mean(c);
                abs_cross_stderr[i][j][l] = acc.stderr(c);
            }
        }
    }
    let gap = h.map(|(_, phi)| ((acc.mean(dim - 1) - phi).abs(), acc.stderr(dim - 1)));
    Ok(DegreeSimulation {
        stats: MultivariateCouplingStats {
            p,
            lambda: moments.lambda,
            sigma: moments.sigma,
            var_cond,
            abs_cross,
            var_cond_stderr,
            abs_cross_stderr,
            conditioning: "graph K".into(),
        },
        gap,
        mean_cond,
        mean_direct,
    })
}

/// The multivariate size-bias statistics with one coupling draw per graph.
pub fn estimate_coupling_stats(cfg: &ErdosRenyiConfig, samples: u64, inner: usize, seed: u64) -> Result<MultivariateCouplingStats> {
    Ok(simulate(cfg, None, inner, &McConfig::new(samples, seed))?.stats)
}

/// Bound from the multivariate size-bias theorem against the empirical gap.
pub fn run_degree_experiment(cfg: &ErdosRenyiConfig, h: &SmoothTestFunction, mc: &McConfig) -> Result<ExperimentReport> {
    h.validate()?;
    let norms = h.derivative_norms();
    let phi = h.exact_phi();
    let sim = simulate(cfg, Some((h, phi)), 1, mc)?;
    let bound = bound_thm_multivariate_sb(&sim.stats, norms.d2, norms.d3)?.with_seed(mc.seed);
    let (gap, gap_stderr) = sim.gap.expect("h supplied");
    let check = isqrt_bound_check(cfg)?;
    Ok(ExperimentReport {
        experiment: "degree-count".into(),
        config: json!({ "graph": cfg, "h": h.to_string(), "mc": mc }),
        lambda: sim.stats.lambda.clone(),
        sigma: rows(&sim.stats.sigma),
        isqrt_max_abs: check.isqrt_max_abs,
        pass: passes(gap, bound.total, gap_stderr),
        bound,
        gap,
        gap_stderr,
        seed: mc.seed,
        diagnostics: json!({
            "isqrt_reference": check.reference,
            "isqrt_reference_violated": check.violated,
            "b": formula_moments(cfg)?.b,
        }),
        wall_time_s: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::StreamConfig;
    use crate::size_bias::exact_law_discrepancy;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn worked_example() {
        let cfg = ErdosRenyiConfig::new(4, 0.5, vec![1]).unwrap();
        let m = theoretical_moments(&cfg).unwrap();
        assert!((m.beta[0] - 0.375).abs() < 1e-15);
        assert!((m.lambda[0] - 1.5).abs() < 1e-14);
        assert!((m.sigma.get(0, 0) - 1.125).abs() < 1e-14);
        let (l, s) = brute_force_moments(&cfg).unwrap();
        assert!(close(l[0], 1.5) && close(s.get(0, 0), 1.125));
    }

    #[test]
    fn complement_symmetry_at_one_half() {
        let cfg = ErdosRenyiConfig::new(5, 0.5, vec![1, 3]).unwrap();
        let (l, _) = brute_force_moments(&cfg).unwrap();
        assert!(close(l[0], l[1]));
    }

    #[test]
    fn small_oracle() {
        let cfg = ErdosRenyiConfig::new(3, 0.3, vec![0, 2]).unwrap();
        let f = formula_moments(&cfg).unwrap();
        let (l, s) = brute_force_moments(&cfg).unwrap();
        for i in 0..2 {
            assert!(close(f.lambda[i], l[i]));
            for j in 0..2 {
                assert!(close(f.sigma.get(i, j), s.get(i, j)), "{i}{j}: {} vs {}", f.sigma.get(i, j), s.get(i, j));
            }
        }
        assert!(matches!(brute_force_moments(&ErdosRenyiConfig::new(6, 0.5, vec![1]).unwrap()), Err(Error::TooLarge(_))));
    }

    #[test]
    fn config_validation() {
        assert!(ErdosRenyiConfig::new(4, 0.0, vec![1]).is_err());
        assert!(ErdosRenyiConfig::new(4, 1.0, vec![1]).is_err());
        assert!(ErdosRenyiConfig::new(4, 0.5, vec![1, 1]).is_err());
        assert!(ErdosRenyiConfig::new(4, 0.5, vec![4]).is_err());
    }

    #[test]
    fn conditional_expectation_examples() {
        let e = GraphSample::empty(3);
        assert!((cond_exp_given_k(&e, &[1, 0], 0, 1) + 2.0).abs() < 1e-15);
        assert_eq!(cond_exp_given_k(&e, &[0], 0, 0), 0.0);
        // every vertex already has degree 2
        let k = GraphSample::complete(3);
        assert_eq!(cond_exp_given_k(&k, &[2], 0, 0), 0.0);
    }

    #[test]
    fn conditional_expectation_matches_enumeration() {
        // average the coupling over V and target subsets exactly
        let cfg = ErdosRenyiConfig::new(5, 0.4, vec![1, 2, 3]).unwrap();
        let pairs = pair_list(5);
        for mask in [0u64, 0b1011, 0b11_0110_1001, 0b11_1111_1111, 0b10_0100_0110] {
            let g = graph_from_mask(5, &pairs, mask);
            let ce = cond_exp_matrix(&g, &cfg.degrees);
            for i in 0..3 {
                let di = cfg.degrees[i];
                let mut want = vec![0.0; 3];
                for v in 0..5 {
                    let dv = g.degree(v);
                    let (removing, pool, m) = if dv > di {
                        (true, g.neighbors(v).iter().map(|&x| x as usize).collect::<Vec<_>>(), dv - di)
                    } else {
                        (false, (0..5).filter(|&u| u != v && !g.has_edge(v, u)).collect(), di - dv)
                    };
                    let subs = subsets(&pool, m);
                    for t in &subs {
                        let r = Rewire { v, removing, targets: t.clone() };
                        let d = rewire_delta(&g, di, &r, &cfg.degrees);
                        for j in 0..3 {
                            want[j] += d[j] / (5.0 * subs.len() as f64);
                        }
                    }
                }
                for j in 0..3 {
                    assert!((ce[i][j] - want[j]).abs() < 1e-13, "mask {mask} i {i} j {j}");
                }
            }
        }
    }

    #[test]
    fn coupling_examples() {
        let mut rng = StreamConfig::new(1).stream(0);
        let e = GraphSample::empty(5);
        let d = couple_degree(&e, &[1], 0, &mut rng);
        assert_eq!(d.ki.edge_count(), 1);
        assert_eq!(d.ki.degree(d.v), 1);
        let k3 = GraphSample::complete(3);
        let mut kept = [0usize; 3];
        for _ in 0..20_000 {
            let d = couple_degree(&k3, &[1], 0, &mut rng);
            assert_eq!(d.ki.degree(d.v), 1);
            assert_eq!(d.ki.edge_count(), 2);
            let other = d.ki.neighbors(d.v)[0] as usize;
            kept[other] += 1;
        }
        assert!(kept.iter().all(|&c| c > 6000));
        let reg = GraphSample::complete(4);
        let d = couple_degree(&reg, &[3], 0, &mut rng);
        assert_eq!(d.w, d.wi);
    }

    #[test]
    fn draws_respect_invariants() {
        let cfg = ErdosRenyiConfig::with_c(40, 2.0, vec![1, 2, 4]).unwrap();
        let mut rng = StreamConfig::new(11).stream(0);
        for _ in 0..500 {
            let k = sample_graph(&cfg, &mut rng);
            assert!(k.is_consistent());
            for i in 0..3 {
                let mut r2 = rng.clone();
                let d = couple_degree(&k, &cfg.degrees, i, &mut rng);
                let fast = coupling_delta(&k, &cfg.degrees, i, &mut r2);
                assert!(d.ki.is_consistent());
                assert_eq!(d.ki.degree(d.v), cfg.degrees[i]);
                let spread = (k.degree(d.v) as f64 - cfg.degrees[i] as f64).abs() + 1.0;
                for j in 0..3 {
                    assert_eq!(d.wi[j] - d.w[j], fast[j]);
                    assert!((d.wi[j] - d.w[j]).abs() <= spread);
                }
                // only edges at V change
                for u in 0..40 {
                    for v in (u + 1)..40 {
                        if u != d.v && v != d.v {
                            assert_eq!(k.has_edge(u, v), d.ki.has_edge(u, v));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn edge_count_statistics() {
        let cfg = ErdosRenyiConfig::new(100, 0.02, vec![1]).unwrap();
        let mut rng = StreamConfig::new(5).stream(0);
        let reps = 4000;
        let counts: Vec<f64> = (0..reps).map(|_| sample_graph(&cfg, &mut rng).edge_count() as f64).collect();
        let mean = counts.iter().sum::<f64>() / reps as f64;
        let sd = (4950.0 * 0.02 * 0.98f64).sqrt();
        assert!((mean - 99.0).abs() < 4.0 * sd / (reps as f64).sqrt());
        let tiny = ErdosRenyiConfig::new(30, 1e-12, vec![0]).unwrap();
        assert_eq!(sample_graph(&tiny, &mut rng).edge_count(), 0);
        let full = ErdosRenyiConfig::new(30, 1.0 - 1e-12, vec![0]).unwrap();
        assert_eq!(sample_graph(&full, &mut rng).edge_count(), 435);
    }

    #[test]
    fn exact_coupled_law() {
        for (n, pi, d) in [(3, 0.5, vec![1]), (4, 0.3, vec![1, 2]), (4, 0.7, vec![0, 3])] {
            let c = DegreeCoupler::new(ErdosRenyiConfig::new(n, pi, d).unwrap()).unwrap();
            assert!(exact_law_discrepancy(&c).unwrap() < 1e-12);
        }
    }

    #[test]
    fn constant_h_has_zero_gap_and_bound() {
        let cfg = ErdosRenyiConfig::with_c(30, 2.0, vec![1, 2]).unwrap();
        let r = run_degree_experiment(&cfg, &SmoothTestFunction::constant(2), &McConfig::new(500, 1)).unwrap();
        assert!(r.gap < 1e-12);
        assert_eq!(r.bound.total, 0.0);
        assert!(r.pass);
    }
}
