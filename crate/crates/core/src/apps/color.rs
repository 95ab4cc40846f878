//! Monochromatic edge counts of a `d`-regular graph under independent
//! vertex colorings, with local-dependence statistics over edge
//! neighborhoods `S_e` (edges sharing a vertex with `e`, including `e`).

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{passes, rows, ExperimentReport, McConfig};
use crate::bounds::{bound_thm_multivariate_local, LocalDepStats};
use crate::error::{Error, Result};
use crate::harness::{parallel_mc, Stream, StreamConfig};
use crate::linalg::{inverse_sqrt, whiten_one, SymMatrix, DEFAULT_PD_TOL};
use crate::size_bias::IndexPicker;
use crate::test_functions::SmoothTestFunction;

pub const MAX_ENUMERATION: u64 = 10_000_000;
const MAX_PAIRING_ATTEMPTS: usize = 100_000;

/// A simple `d`-regular graph with its edge neighborhoods.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularGraph {
    n: usize,
    d: usize,
    edges: Vec<(usize, usize)>,
    /// Edge indices at each vertex.
    incident: Vec<Vec<usize>>,
    /// `S_e`, sorted.
    nbhd: Vec<Vec<usize>>,
}

impl RegularGraph {
    pub fn from_edges(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut incident = vec![Vec::new(); n];
        for (k, &(u, v)) in edges.iter().enumerate() {
            if u == v || u >= n || v >= n {
                return Err(Error::InvalidConfig(format!("bad edge ({u}, {v})")));
            }
            incident[u].push(k);
            incident[v].push(k);
        }
        let d = incident.first().map_or(0, |a| a.len());
        if let Some(v) = (0..n).find(|&v| incident[v].len() != d) {
            return Err(Error::InvalidConfig(format!(
                "graph is not regular: vertex {v} has degree {}, vertex 0 has {d}",
                incident[v].len()
            )));
        }
        for u in 0..n {
            let mut others: Vec<usize> = incident[u]
                .iter()
                .map(|&k| if edges[k].0 == u { edges[k].1 } else { edges[k].0 })
                .collect();
            others.sort_unstable();
            if others.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidConfig(format!("multiple edges at vertex {u}")));
            }
        }
        let nbhd = edges
            .iter()
            .map(|&(u, v)| {
                let mut s: Vec<usize> = incident[u].iter().chain(&incident[v]).copied().collect();
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        Ok(RegularGraph {
            n,
            d,
            edges,
            incident,
            nbhd,
        })
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidConfig(format!("cycle needs n >= 3, got {n}")));
        }
        Self::from_edges(n, (0..n).map(|v| (v, (v + 1) % n)).collect())
    }

    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig(format!("complete graph needs n >= 2, got {n}")));
        }
        let mut e = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                e.push((u, v));
            }
        }
        Self::from_edges(n, e)
    }

    /// Perfect matching on `n` (even) vertices.
    pub fn matching(n: usize) -> Result<Self> {
        if n < 2 || n % 2 == 1 {
            return Err(Error::InvalidConfig(format!("matching needs an even n >= 2, got {n}")));
        }
        Self::from_edges(n, (0..n / 2).map(|k| (2 * k, 2 * k + 1)).collect())
    }

    /// Uniform `d`-regular simple graph by the pairing model, rejecting
    /// pairings with loops or repeated edges.
    pub fn random_regular(n: usize, d: usize, rng: &mut Stream) -> Result<Self> {
        if d == 0 || d >= n || (n * d) % 2 == 1 {
            return Err(Error::InvalidConfig(format!("no simple {d}-regular graph on {n} vertices")));
        }
        let mut points: Vec<usize> = (0..n * d).map(|k| k / d).collect();
        for _ in 0..MAX_PAIRING_ATTEMPTS {
            points.shuffle(rng);
            let edges: Vec<(usize, usize)> = points
                .chunks_exact(2)
                .map(|c| (c[0].min(c[1]), c[0].max(c[1])))
                .collect();
            if edges.iter().any(|e| e.0 == e.1) {
                continue;
            }
            let mut sorted = edges.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                continue;
            }
            return Self::from_edges(n, edges);
        }
        Err(Error::InvalidConfig(format!(
            "pairing model did not produce a simple graph in {MAX_PAIRING_ATTEMPTS} attempts"
        )))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    /// `N = nd/2`.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighborhood(&self, e: usize) -> &[usize] {
        &self.nbhd[e]
    }

    pub fn neighborhoods(&self) -> &[Vec<usize>] {
        &self.nbhd
    }
}

/// Graph families accepted on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GraphSpec {
    Cycle { n: usize },
    Complete { n: usize },
    Matching { n: usize },
    Regular { n: usize, d: usize },
}

impl GraphSpec {
    /// Random families draw from a stream derived from `seed`.
    pub fn build(&self, seed: u64) -> Result<RegularGraph> {
        match *self {
            GraphSpec::Cycle { n } => RegularGraph::cycle(n),
            GraphSpec::Complete { n } => RegularGraph::complete(n),
            GraphSpec::Matching { n } => RegularGraph::matching(n),
            GraphSpec::Regular { n, d } => {
                let mut rng = StreamConfig::new(seed).derive(GRAPH_LABEL).stream(0);
                RegularGraph::random_regular(n, d, &mut rng)
            }
        }
    }
}

const GRAPH_LABEL: u64 = 0x0067_7261_7068;

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Cycle { n } => write!(f, "cycle:{n}"),
            GraphSpec::Complete { n } => write!(f, "complete:{n}"),
            GraphSpec::Matching { n } => write!(f, "matching:{n}"),
            GraphSpec::Regular { n, d } => write!(f, "regular:n={n},d={d}"),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unrecognized graph '{s}'"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        match kind {
            "cycle" => Ok(GraphSpec::Cycle { n: num(rest)? }),
            "complete" => Ok(GraphSpec::Complete { n: num(rest)? }),
            "matching" => Ok(GraphSpec::Matching { n: num(rest)? }),
            "regular" => {
                let (mut n, mut d) = (None, None);
                for kv in rest.split(',') {
                    match kv.split_once('=').ok_or_else(bad)? {
                        ("n", v) => n = Some(num(v)?),
                        ("d", v) => d = Some(num(v)?),
                        _ => return Err(bad()),
                    }
                }
                Ok(GraphSpec::Regular {
                    n: n.ok_or_else(bad)?,
                    d: d.ok_or_else(bad)?,
                })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColoringConfig {
    pub probs: Vec<f64>,
}

impl ColoringConfig {
    /// Probabilities must be nonnegative and sum to 1. Zero entries are
    /// allowed so degenerate colorings can be expressed; they fail the
    /// positive-definiteness check downstream.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidConfig("need at least one color".into()));
        }
        for (idx, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::NonFinite { idx, value: p });
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!("color probabilities sum to {total}, not 1")));
        }
        Ok(ColoringConfig { probs })
    }

    pub fn equal(p: usize) -> Result<Self> {
        Self::new(vec![1.0 / p as f64; p])
    }

    pub fn p(&self) -> usize {
        self.probs.len()
    }

    /// `B = 1 / min_i π_i²(1 − π_i)`.
    pub fn b(&self) -> f64 {
        1.0 / self
            .probs
            .iter()
            .map(|&p| p * p * (1.0 - p))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Closed-form `(λ, Σ)` without the positive-definiteness check.
pub fn formula_moments(g: &RegularGraph, cfg: &ColoringConfig) -> Result<(Vec<f64>, SymMatrix)> {
    let big_n = g.edge_count() as f64;
    let d = g.degree() as f64;
    let p = cfg.p();
    let pi = &cfg.probs;
    let lambda = pi.iter().map(|x| big_n * x * x).collect();
    let mut data = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            data[i * p + j] = if i == j {
                let q = pi[i];
                big_n * q * q * (1.0 - q * q) + 2.0 * big_n * (d - 1.0) * (q.powi(3) - q.powi(4))
            } else {
                -big_n * (2.0 * d - 1.0) * pi[i] * pi[i] * pi[j] * pi[j]
            };
        }
    }
    Ok((lambda, SymMatrix::new(p, data)?))
}

/// [`formula_moments`] with `NotPositiveDefinite` on a singular `Σ`.
pub fn theoretical_moments(g: &RegularGraph, cfg: &ColoringConfig) -> Result<(Vec<f64>, SymMatrix)> {
    let (l, s) = formula_moments(g, cfg)?;
    inverse_sqrt(&s, DEFAULT_PD_TOL)?;
    Ok((l, s))
}

fn color_picker(cfg: &ColoringConfig) -> IndexPicker {
    IndexPicker::new(&cfg.probs).expect("validated probabilities")
}

fn counts_of(g: &RegularGraph, colors: &[usize], p: usize) -> Vec<f64> {
    let mut w = vec![0.0; p];
    for &(u, v) in g.edges() {
        if colors[u] == colors[v] {
            w[colors[u]] += 1.0;
        }
    }
    w
}

/// Colors vertices independently and counts monochromatic edges per color.
pub fn sample_counts(g: &RegularGraph, cfg: &ColoringConfig, rng: &mut Stream) -> Vec<f64> {
    let pick = color_picker(cfg);
    let colors: Vec<usize> = (0..g.n()).map(|_| pick.pick(rng)).collect();
    counts_of(g, &colors, cfg.p())
}

/// Per-coloring quantities: `W`, `Q_ij = Σ_e X_ei R_ej` and
/// `Σ_e |X_ei R_ej R_ek|` with `R_ej = Σ_{f∈S_e} X_fj`.
struct LocalForms {
    w: Vec<f64>,
    q: Vec<f64>,
    triple: Vec<f64>,
}

fn local_forms(g: &RegularGraph, pi: &[f64], colors: &[usize]) -> LocalForms {
    let p = pi.len();
    let big_n = g.edge_count();
    // centered indicators X_ei, edge-major
    let mut x = vec![0.0; big_n * p];
    let mut w = vec![0.0; p];
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        for i in 0..p {
            x[e * p + i] = -pi[i] * pi[i];
        }
        if colors[u] == colors[v] {
            x[e * p + colors[u]] += 1.0;
            w[colors[u]] += 1.0;
        }
    }
    // vertex sums Y_j(u) = Σ_{f ∋ u} X_fj
    let mut y = vec![0.0; g.n() * p];
    for (u, inc) in g.incident.iter().enumerate() {
        for &f in inc {
            for j in 0..p {
                y[u * p + j] += x[f * p + j];
            }
        }
    }
    let mut q = vec![0.0; p * p];
    let mut triple = vec![0.0; p * p * p];
    let mut r = vec![0.0; p];
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        for j in 0..p {
            r[j] = y[u * p + j] + y[v * p + j] - x[e * p + j];
        }
        for i in 0..p {
            let xi = x[e * p + i];
            for j in 0..p {
                q[i * p + j] += xi * r[j];
                for k in 0..p {
                    triple[(i * p + j) * p + k] += (xi * r[j] * r[k]).abs();
                }
            }
        }
    }
    LocalForms { w, q, triple }
}

fn assemble_stats(
    p: usize,
    sigma: SymMatrix,
    t1sq: &[f64],
    t1sq_se: &[f64],
    t3: &[f64],
    t3_se: &[f64],
    nbhd: Vec<Vec<usize>>,
) -> LocalDepStats {
    let mut t1 = vec![vec![0.0; p]; p];
    let mut t1_stderr = vec![vec![0.0; p]; p];
    let mut t3m = vec![vec![vec![0.0; p]; p]; p];
    let mut t3_stderr = vec![vec![vec![0.0; p]; p]; p];
    for i in 0..p {
        for j in 0..p {
            let v = t1sq[i * p + j].max(0.0);
            t1[i][j] = v.sqrt();
            let se = t1sq_se[i * p + j];
            t1_stderr[i][j] = if v > se { se / (2.0 * v.sqrt()) } else { se.sqrt() };
            for k in 0..p {
                t3m[i][j][k] = t3[(i * p + j) * p + k];
                t3_stderr[i][j][k] = t3_se[(i * p + j) * p + k];
            }
        }
    }
    LocalDepStats {
        p,
        sigma,
        t1,
        t2: 0.0,
        t3: t3m,
        t1_stderr,
        t2_stderr: 0.0,
        t3_stderr,
        neighborhoods: Some(nbhd),
    }
}

/// Local-dependence statistics from `samples` colorings. `T2` is exactly 0:
/// `X_ei` is a function of the colors at `e`'s endpoints, and every edge
/// whose indicator depends on those colors lies in `S_e`.
pub fn local_dep_stats(g: &RegularGraph, cfg: &ColoringConfig, mc: &McConfig) -> Result<LocalDepStats> {
    Ok(simulate(g, cfg, None, mc)?.0)
}

fn simulate(
    g: &RegularGraph,
    cfg: &ColoringConfig,
    h: Option<(&SmoothTestFunction, f64)>,
    mc: &McConfig,
) -> Result<(LocalDepStats, Option<(f64, f64)>)> {
    mc.validate(2)?;
    let (lambda, sigma) = formula_moments(g, cfg)?;
    let p = cfg.p();
    let isqrt = match h {
        Some((h, _)) => {
            if h.dim() != p {
                return Err(Error::DimensionMismatch { expected: p, got: h.dim() });
            }
            Some(inverse_sqrt(&sigma, DEFAULT_PD_TOL)?)
        }
        None => None,
    };
    let pick = color_picker(cfg);
    let (p2, p3) = (p * p, p * p * p);
    let dim = p2 + p3 + 1;
    let acc = parallel_mc(mc.samples, dim, &mc.streams(), |rng, acc| {
        let colors: Vec<usize> = (0..g.n()).map(|_| pick.pick(rng)).collect();
        let f = local_forms(g, &cfg.probs, &colors);
        let mut row = Vec::with_capacity(dim);
        for i in 0..p {
            for j in 0..p {
                row.push((f.q[i * p + j] - sigma.get(i, j)).powi(2));
            }
        }
        row.extend_from_slice(&f.triple);
        row.push(match (h, &isqrt) {
            (Some((h, _)), Some(m)) => h.eval(&whiten_one(&f.w, &lambda, m).expect("dimensions checked")),
            _ => 0.0,
        });
        acc.push(&row);
    });
    let col = |r: std::ops::Range<usize>, se: bool| -> Vec<f64> {
        r.map(|c| if se { acc.stderr(c) } else { acc.mean(c) }).collect()
    };
    let stats = assemble_stats(
        p,
        sigma,
        &col(0..p2, false),
        &col(0..p2, true),
        &col(p2..p2 + p3, false),
        &col(p2..p2 + p3, true),
        g.neighborhoods().to_vec(),
    );
    let gap = h.map(|(_, phi)| ((acc.mean(dim - 1) - phi).abs(), acc.stderr(dim - 1)));
    Ok((stats, gap))
}

/// Exact moments by enumerating every coloring.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactColorMoments {
    pub lambda: Vec<f64>,
    pub sigma: SymMatrix,
    pub t1: Vec<Vec<f64>>,
    pub t3: Vec<Vec<Vec<f64>>>,
}

pub fn brute_force_moments(g: &RegularGraph, cfg: &ColoringConfig) -> Result<ExactColorMoments> {
    let p = cfg.p();
    let n = g.n();
    let total = (p as u64).checked_pow(n as u32).filter(|&t| t <= MAX_ENUMERATION);
    let total = total.ok_or_else(|| {
        Error::TooLarge(format!("{p}^{n} colorings exceed the enumeration limit {MAX_ENUMERATION}"))
    })?;
    let mut colors = vec![0usize; n];
    let mut outcomes: Vec<(LocalForms, f64)> = Vec::with_capacity(total as usize);
    for code in 0..total {
        let mut c = code;
        let mut prob = 1.0;
        for slot in colors.iter_mut() {
            *slot = (c % p as u64) as usize;
            c /= p as u64;
            prob *= cfg.probs[*slot];
        }
        if prob > 0.0 {
            outcomes.push((local_forms(g, &cfg.probs, &colors), prob));
        }
    }
    let mut lambda = vec![0.0; p];
    for (f, pr) in &outcomes {
        for i in 0..p {
            lambda[i] += pr * f.w[i];
        }
    }
    let mut sig = vec![0.0; p * p];
    let mut t1sq = vec![0.0; p * p];
    let mut t3 = vec![0.0; p * p * p];
    for (f, pr) in &outcomes {
        for i in 0..p {
            for j in 0..p {
                sig[i * p + j] += pr * (f.w[i] - lambda[i]) * (f.w[j] - lambda[j]);
            }
        }
        for k in 0..p * p * p {
            t3[k] += pr * f.triple[k];
        }
    }
    let sigma = SymMatrix::new(p, sig)?;
    for (f, pr) in &outcomes {
        for i in 0..p {
            for j in 0..p {
                t1sq[i * p + j] += pr * (f.q[i * p + j] - sigma.get(i, j)).powi(2);
            }
        }
    }
    let zeros = vec![0.0; p * p * p];
    let s = assemble_stats(p, sigma.clone(), &t1sq, &zeros[..p * p], &t3, &zeros, Vec::new());
    Ok(ExactColorMoments {
        lambda,
        sigma,
        t1: s.t1,
        t3: s.t3,
    })
}

/// Spectral facts behind the `‖Σ^{-1/2}‖` bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralCheck {
    /// Smallest eigenvalue of `Σ − N·H`, `H = diag(π_i² − π_i³)`.
    pub min_eig_sigma_minus_nh: f64,
    pub isqrt_max_abs: f64,
    /// `N^{-1/2} B^{1/2}`.
    pub reference: f64,
}

impl SpectralCheck {
    pub fn holds(&self) -> bool {
        self.min_eig_sigma_minus_nh >= -1e-10 && self.isqrt_max_abs <= self.reference
    }
}

pub fn spectral_check(g: &RegularGraph, cfg: &ColoringConfig) -> Result<SpectralCheck> {
    let (_, sigma) = theoretical_moments(g, cfg)?;
    let big_n = g.edge_count() as f64;
    let h: Vec<f64> = cfg.probs.iter().map(|&q| big_n * (q * q - q.powi(3))).collect();
    let diff = sigma.sub(&SymMatrix::diagonal(&h))?;
    Ok(SpectralCheck {
        min_eig_sigma_minus_nh: diff.min_eigenvalue(),
        isqrt_max_abs: inverse_sqrt(&sigma, DEFAULT_PD_TOL)?.max_abs(),
        reference: (cfg.b() / big_n).sqrt(),
    })
}

/// Local-dependence bound against the empirical gap.
pub fn run_color_experiment(
    spec: &GraphSpec,
    cfg: &ColoringConfig,
    h: &SmoothTestFunction,
    mc: &McConfig,
) -> Result<ExperimentReport> {
    h.validate()?;
    let g = spec.build(mc.seed)?;
    let norms = h.derivative_norms();
    let (stats, gap) = simulate(&g, cfg, Some((h, h.exact_phi())), mc)?;
    let (gap, gap_stderr) = gap.expect("h supplied");
    let bound = bound_thm_multivariate_local(&stats, norms.d1, norms.d2, norms.d3)?.with_seed(mc.seed);
    let check = spectral_check(&g, cfg)?;
    let (lambda, _) = formula_moments(&g, cfg)?;
    Ok(ExperimentReport {
        experiment: "color-match".into(),
        config: json!({
            "graph": spec.to_string(),
            "n": g.n(),
            "d": g.degree(),
            "edges": g.edge_count(),
            "colors": cfg.probs,
            "h": h.to_string(),
            "mc": mc,
        }),
        lambda,
        sigma: rows(&stats.sigma),
        isqrt_max_abs: check.isqrt_max_abs,
        pass: passes(gap, bound.total, gap_stderr),
        bound,
        gap,
        gap_stderr,
        seed: mc.seed,
        diagnostics: json!({
            "isqrt_reference": check.reference,
            "min_eig_sigma_minus_nh": check.min_eig_sigma_minus_nh,
        }),
        wall_time_s: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::check_symmetric_neighborhoods;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn triangle_values() {
        let g = RegularGraph::cycle(3).unwrap();
        let cfg = ColoringConfig::equal(2).unwrap();
        let (l, s) = theoretical_moments(&g, &cfg).unwrap();
        assert_eq!(l, vec![0.75, 0.75]);
        assert!((s.get(0, 0) - 0.9375).abs() < 1e-15);
        assert!((s.get(0, 1) + 0.5625).abs() < 1e-15);
        let e = brute_force_moments(&g, &cfg).unwrap();
        assert!(close(e.sigma.get(0, 0), 0.9375, 1e-12));
        assert!(close(e.sigma.get(0, 1), -0.5625, 1e-12));
    }

    #[test]
    fn single_color_is_degenerate() {
        let g = RegularGraph::cycle(5).unwrap();
        let cfg = ColoringConfig::new(vec![1.0]).unwrap();
        assert!(matches!(theoretical_moments(&g, &cfg), Err(Error::NotPositiveDefinite { .. })));
        let e = brute_force_moments(&g, &ColoringConfig::new(vec![1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(e.lambda, vec![5.0, 0.0]);
        assert!(e.sigma.max_abs() < 1e-12);
        let mut rng = StreamConfig::new(1).stream(0);
        assert_eq!(sample_counts(&g, &ColoringConfig::new(vec![1.0, 0.0]).unwrap(), &mut rng), vec![5.0, 0.0]);
    }

    #[test]
    fn direct_count() {
        let g = RegularGraph::cycle(3).unwrap();
        assert_eq!(counts_of(&g, &[0, 0, 1], 2), vec![1.0, 0.0]);
    }

    #[test]
    fn neighborhoods() {
        let mut rng = StreamConfig::new(2).stream(0);
        let graphs = [
            RegularGraph::cycle(10).unwrap(),
            RegularGraph::complete(6).unwrap(),
            RegularGraph::matching(8).unwrap(),
            RegularGraph::random_regular(30, 3, &mut rng).unwrap(),
            RegularGraph::random_regular(20, 4, &mut rng).unwrap(),
        ];
        for g in &graphs {
            check_symmetric_neighborhoods(g.neighborhoods()).unwrap();
            for e in 0..g.edge_count() {
                assert_eq!(g.neighborhood(e).len(), 2 * g.degree() - 1);
                assert!(g.neighborhood(e).contains(&e));
            }
        }
        assert!(RegularGraph::random_regular(7, 3, &mut rng).is_err());
    }

    #[test]
    fn oracle_instances() {
        let graphs = [
            RegularGraph::cycle(3).unwrap(),
            RegularGraph::cycle(4).unwrap(),
            RegularGraph::matching(6).unwrap(),
            RegularGraph::complete(4).unwrap(),
        ];
        for g in &graphs {
            for probs in [vec![0.5, 0.5], vec![0.2, 0.3, 0.5]] {
                let cfg = ColoringConfig::new(probs).unwrap();
                let (l, s) = formula_moments(g, &cfg).unwrap();
                let e = brute_force_moments(g, &cfg).unwrap();
                for i in 0..cfg.p() {
                    assert!(close(l[i], e.lambda[i], 1e-12));
                    for j in 0..cfg.p() {
                        assert!(close(s.get(i, j), e.sigma.get(i, j), 1e-12));
                    }
                }
            }
        }
    }

    #[test]
    fn matching_t1_closed_form() {
        let g = RegularGraph::matching(8).unwrap();
        let cfg = ColoringConfig::new(vec![0.3, 0.7]).unwrap();
        let e = brute_force_moments(&g, &cfg).unwrap();
        for i in 0..2 {
            let q = cfg.probs[i];
            let want = (4.0 * (1.0 - 2.0 * q * q).powi(2) * q * q * (1.0 - q * q)).sqrt();
            assert!(close(e.t1[i][i], want, 1e-12));
        }
    }

    #[test]
    fn mc_matches_enumeration() {
        let g = RegularGraph::cycle(3).unwrap();
        let cfg = ColoringConfig::equal(2).unwrap();
        let e = brute_force_moments(&g, &cfg).unwrap();
        let s = local_dep_stats(&g, &cfg, &McConfig::new(200_000, 8)).unwrap();
        assert_eq!(s.t2, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                assert!((s.t1[i][j] - e.t1[i][j]).abs() <= 4.0 * s.t1_stderr[i][j] + 1e-12);
                for k in 0..2 {
                    assert!((s.t3[i][j][k] - e.t3[i][j][k]).abs() <= 4.0 * s.t3_stderr[i][j][k] + 1e-12);
                }
            }
        }
    }

    #[test]
    fn sampled_counts_match_moments() {
        let g = RegularGraph::cycle(12).unwrap();
        let cfg = ColoringConfig::new(vec![0.2, 0.3, 0.5]).unwrap();
        let (l, s) = theoretical_moments(&g, &cfg).unwrap();
        let acc = parallel_mc(200_000, 6, &StreamConfig::new(4), |rng, acc| {
            let w = sample_counts(&g, &cfg, rng);
            acc.push(&[w[0], w[1], w[2], w[0] * w[0], w[0] * w[1], w[2] * w[2]]);
        });
        for i in 0..3 {
            assert!((acc.mean(i) - l[i]).abs() <= 4.0 * acc.stderr(i));
        }
        let cov01 = acc.mean(4) - acc.mean(0) * acc.mean(1);
        assert!((cov01 - s.get(0, 1)).abs() < 4.0 * acc.stderr(4) + 0.02);
        let var2 = acc.mean(5) - acc.mean(2).powi(2);
        assert!((var2 - s.get(2, 2)).abs() < 4.0 * acc.stderr(5) + 0.05);
    }

    #[test]
    fn spectral_bound_on_examples() {
        let g = RegularGraph::cycle(20).unwrap();
        let c = spectral_check(&g, &ColoringConfig::new(vec![0.1, 0.2, 0.7]).unwrap()).unwrap();
        assert!(c.holds(), "{c:?}");
    }

    #[test]
    fn graph_spec_round_trip() {
        for s in ["cycle:64", "complete:8", "matching:10", "regular:n=200,d=3"] {
            assert_eq!(s.parse::<GraphSpec>().unwrap().to_string(), s);
        }
        assert!("torus:3".parse::<GraphSpec>().is_err());
        let a = GraphSpec::Regular { n: 50, d: 3 }.build(7).unwrap();
        let b = GraphSpec::Regular { n: 50, d: 3 }.build(7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_h() {
        let r = run_color_experiment(
            &GraphSpec::Cycle { n: 20 },
            &ColoringConfig::equal(2).unwrap(),
            &SmoothTestFunction::constant(2),
            &McConfig::new(1000, 3),
        )
        .unwrap();
        assert_eq!(r.bound.total, 0.0);
        assert!(r.gap < 1e-12);
    }
}
