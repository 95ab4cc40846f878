//! Evaluators for the four explicit-constant normal approximation bounds
//! and the covariance identity `λ_i E(Wⁱ_j − W_j) = σ_ij`.
//!
//! Norms are max-abs-entry. Monte Carlo standard errors are propagated to
//! each term by the first-order delta method and reported alongside the
//! bound, never added to it.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::harness::{try_parallel_mc, StreamConfig};
use crate::linalg::{inverse_sqrt, SymMatrix, DEFAULT_PD_TOL};
use crate::size_bias::{CoupledPairSampler, Z_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivariateCouplingStats {
    pub lambda: f64,
    pub sigma2: f64,
    /// Estimate of `Var E(W* − W | ·)`.
    pub var_cond: f64,
    /// Estimate of `E(W* − W)²`.
    pub mean_sq_diff: f64,
    pub var_cond_stderr: f64,
    pub mean_sq_diff_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultivariateCouplingStats {
    pub p: usize,
    pub lambda: Vec<f64>,
    pub sigma: SymMatrix,
    /// `Var E[Wⁱ_j − W_j | ·]`, indexed `[i][j]`.
    pub var_cond: Vec<Vec<f64>>,
    /// `E|(Wⁱ_j − W_j)(Wⁱ_k − W_k)|`, indexed `[i][j][k]`.
    pub abs_cross: Vec<Vec<Vec<f64>>>,
    pub var_cond_stderr: Vec<Vec<f64>>,
    pub abs_cross_stderr: Vec<Vec<Vec<f64>>>,
    /// Which σ-field the conditional variance conditions on.
    pub conditioning: String,
}

/// Moments entering the univariate local dependence bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivariateLocalStats {
    pub sigma2: f64,
    /// `E{Σ_v Σ_{u∈S_v} (X_v X_u − E X_v X_u)}²`, before the square root.
    pub centered_square: f64,
    /// `Σ_v E|E[X_v | X_u: u ∉ S_v]|`.
    pub cond_abs: f64,
    /// `Σ_v E|X_v Σ_{u∈S_v} X_u Σ_{t∈S_v} X_t|`.
    pub triple: f64,
    #[serde(default)]
    pub stderrs: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalDepStats {
    pub p: usize,
    pub sigma: SymMatrix,
    /// Root-mean-square centered quadratic forms, `[i][j]`.
    pub t1: Vec<Vec<f64>>,
    pub t2: f64,
    /// Triple-product absolute moments, `[i][j][k]`.
    pub t3: Vec<Vec<Vec<f64>>>,
    pub t1_stderr: Vec<Vec<f64>>,
    pub t2_stderr: f64,
    pub t3_stderr: Vec<Vec<Vec<f64>>>,
    /// Dependency neighborhoods of the summands, when supplied.
    #[serde(skip)]
    pub neighborhoods: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTerm {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: String,
    pub terms: Vec<BoundTerm>,
    pub total: f64,
    pub stderr: f64,
    pub seed: Option<u64>,
    pub inputs: Value,
    /// `‖Σ^{-1/2}‖` (max-abs-entry) and its spectral norm, when used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isqrt_max_abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isqrt_spectral: Option<f64>,
}

impl BoundReport {
    fn assemble(theorem: &str, terms: Vec<BoundTerm>, inputs: Value) -> Self {
        let total = terms.iter().map(|t| t.value).sum();
        let stderr = terms.iter().map(|t| t.stderr * t.stderr).sum::<f64>().sqrt();
        BoundReport {
            theorem: theorem.into(),
            terms,
            total,
            stderr,
            seed: None,
            inputs,
            isqrt_max_abs: None,
            isqrt_spectral: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

fn term(name: &str, value: f64, stderr: f64) -> BoundTerm {
    BoundTerm {
        name: name.into(),
        value,
        stderr,
    }
}

fn finite_norm(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::NonfiniteNorm { name })
    }
}

/// Delta-method stderr of `√x` from that of `x`. At `x = 0` the derivative
/// blows up; `√se` bounds the root of anything within one stderr of zero.
fn sqrt_stderr(x: f64, se: f64) -> f64 {
    if x > se {
        se / (2.0 * x.sqrt())
    } else {
        se.sqrt()
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")))
    }
}

/// `2‖h‖(λ/σ²)√var_cond + ‖h'‖(λ/σ³) E(W* − W)²`.
pub fn bound_thm_univariate_sb(s: &UnivariateCouplingStats, h_sup: f64, h_d1: f64) -> Result<BoundReport> {
    let h_sup = finite_norm("h", h_sup)?;
    let h_d1 = finite_norm("h'", h_d1)?;
    let sigma2 = positive("sigma^2", s.sigma2)?;
    let sigma = sigma2.sqrt();
    let c1 = 2.0 * h_sup * s.lambda / sigma2;
    let c2 = h_d1 * s.lambda / (sigma2 * sigma);
    let vc = s.var_cond.max(0.0);
    let terms = vec![
        term("conditional_variance", c1 * vc.sqrt(), c1 * sqrt_stderr(vc, s.var_cond_stderr)),
        term("mean_square_difference", c2 * s.mean_sq_diff, c2 * s.mean_sq_diff_stderr),
    ];
    Ok(BoundReport::assemble(
        "univariate_size_bias",
        terms,
        json!({ "stats": s, "h_sup": h_sup, "h_d1": h_d1 }),
    ))
}

fn isqrt_of(sigma: &SymMatrix) -> Result<(f64, f64)> {
    let m = inverse_sqrt(sigma, DEFAULT_PD_TOL)?;
    Ok((m.max_abs(), m.spectral_norm()))
}

/// `(p²/2)‖Σ^{-1/2}‖²‖D²h‖ Σ_ij λ_i √var_cond_ij
///  + (p³/6)‖Σ^{-1/2}‖³‖D³h‖ Σ_ijk λ_i abs_cross_ijk`.
pub fn bound_thm_multivariate_sb(s: &MultivariateCouplingStats, d2: f64, d3: f64) -> Result<BoundReport> {
    let d2 = finite_norm("D2h", d2)?;
    let d3 = finite_norm("D3h", d3)?;
    let p = s.p;
    check_shapes(p, &[s.lambda.len(), s.sigma.dim(), s.var_cond.len(), s.abs_cross.len()])?;
    let (nrm, spec) = isqrt_of(&s.sigma)?;
    let pf = p as f64;
    let c1 = 0.5 * pf * pf * nrm * nrm * d2;
    let c3 = pf * pf * pf / 6.0 * nrm.powi(3) * d3;
    let (mut s1, mut v1, mut s3, mut v3) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..p {
        let l = s.lambda[i];
        for j in 0..p {
            let vc = s.var_cond[i][j].max(0.0);
            s1 += l * vc.sqrt();
            v1 += (l * sqrt_stderr(vc, s.var_cond_stderr[i][j])).powi(2);
            for k in 0..p {
                s3 += l * s.abs_cross[i][j][k];
                v3 += (l * s.abs_cross_stderr[i][j][k]).powi(2);
            }
        }
    }
    let terms = vec![
        term("conditional_variance", c1 * s1, c1 * v1.sqrt()),
        term("third_order", c3 * s3, c3 * v3.sqrt()),
    ];
    let mut r = BoundReport::assemble(
        "multivariate_size_bias",
        terms,
        json!({ "stats": s, "d2h": d2, "d3h": d3 }),
    );
    r.isqrt_max_abs = Some(nrm);
    r.isqrt_spectral = Some(spec);
    Ok(r)
}

/// `(2‖h‖/σ²)√(centered square) + √(π/2)(‖h‖/σ) Σ E|E[X_v|..]|
///  + (‖h'‖/σ³) Σ E|X_v ΣX_u ΣX_t|`.
pub fn bound_thm_univariate_local(s: &UnivariateLocalStats, h_sup: f64, h_d1: f64) -> Result<BoundReport> {
    let h_sup = finite_norm("h", h_sup)?;
    let h_d1 = finite_norm("h'", h_d1)?;
    let sigma2 = positive("sigma^2", s.sigma2)?;
    let sigma = sigma2.sqrt();
    let c1 = 2.0 * h_sup / sigma2;
    let c2 = FRAC_PI_2.sqrt() * h_sup / sigma;
    let c3 = h_d1 / (sigma2 * sigma);
    let cs = s.centered_square.max(0.0);
    let terms = vec![
        term("centered_square", c1 * cs.sqrt(), c1 * sqrt_stderr(cs, s.stderrs[0])),
        term("outside_dependence", c2 * s.cond_abs, c2 * s.stderrs[1]),
        term("third_order", c3 * s.triple, c3 * s.stderrs[2]),
    ];
    Ok(BoundReport::assemble(
        "univariate_local_dependence",
        terms,
        json!({ "stats": s, "h_sup": h_sup, "h_d1": h_d1 }),
    ))
}

/// `f ∈ S_e ⇔ e ∈ S_f`.
pub fn check_symmetric_neighborhoods(s: &[Vec<usize>]) -> Result<()> {
    let sets: Vec<std::collections::BTreeSet<usize>> = s.iter().map(|v| v.iter().copied().collect()).collect();
    for (a, set) in sets.iter().enumerate() {
        for &b in set {
            let back = sets.get(b).ok_or(Error::DimensionMismatch {
                expected: sets.len(),
                got: b,
            })?;
            if !back.contains(&a) {
                return Err(Error::AsymmetricNeighborhoods(b, a));
            }
        }
    }
    Ok(())
}

/// `(p²/2)‖Σ^{-1/2}‖²‖D²h‖ Σ T1 + p‖Σ^{-1/2}‖‖Dh‖ T2
///  + (p³/6)‖Σ^{-1/2}‖³‖D³h‖ Σ T3`.
pub fn bound_thm_multivariate_local(s: &LocalDepStats, d1: f64, d2: f64, d3: f64) -> Result<BoundReport> {
    let d1 = finite_norm("Dh", d1)?;
    let d2 = finite_norm("D2h", d2)?;
    let d3 = finite_norm("D3h", d3)?;
    let p = s.p;
    check_shapes(p, &[s.sigma.dim(), s.t1.len(), s.t3.len()])?;
    if let Some(nb) = &s.neighborhoods {
        check_symmetric_neighborhoods(nb)?;
    }
    let (nrm, spec) = isqrt_of(&s.sigma)?;
    let pf = p as f64;
    let c1 = 0.5 * pf * pf * nrm * nrm * d2;
    let c2 = pf * nrm * d1;
    let c3 = pf * pf * pf / 6.0 * nrm.powi(3) * d3;
    let (mut s1, mut v1, mut s3, mut v3) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..p {
        for j in 0..p {
            s1 += s.t1[i][j];
            v1 += s.t1_stderr[i][j].powi(2);
            for k in 0..p {
                s3 += s.t3[i][j][k];
                v3 += s.t3_stderr[i][j][k].powi(2);
            }
        }
    }
    let terms = vec![
        term("centered_quadratic", c1 * s1, c1 * v1.sqrt()),
        term("outside_dependence", c2 * s.t2, c2 * s.t2_stderr),
        term("third_order", c3 * s3, c3 * v3.sqrt()),
    ];
    let mut r = BoundReport::assemble(
        "multivariate_local_dependence",
        terms,
        json!({ "stats": s, "dh": d1, "d2h": d2, "d3h": d3 }),
    );
    r.isqrt_max_abs = Some(nrm);
    r.isqrt_spectral = Some(spec);
    Ok(r)
}

fn check_shapes(p: usize, lens: &[usize]) -> Result<()> {
    for &l in lens {
        if l != p {
            return Err(Error::DimensionMismatch { expected: p, got: l });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceIdentityReport {
    /// `λ_i Ê(Wⁱ_j − W_j)`.
    pub estimate: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub max_abs_z: f64,
    pub pass: bool,
}

/// `z_ij = (λ_i Ê(Wⁱ_j − W_j) − Σ_ij) / stderr`, one derived stream per `i`.
pub fn covariance_identity_check<S: CoupledPairSampler + ?Sized>(
    s: &S,
    sigma_target: &SymMatrix,
    samples: u64,
    cfg: &StreamConfig,
) -> Result<CovarianceIdentityReport> {
    let p = s.dim();
    check_shapes(p, &[sigma_target.dim()])?;
    let lambda = s.means();
    let (mut estimate, mut stderr, mut z) = (vec![vec![0.0; p]; p], vec![vec![0.0; p]; p], vec![vec![0.0; p]; p]);
    for i in 0..p {
        let acc = try_parallel_mc(samples, p, &cfg.derive(i as u64), |rng, acc| {
            let d = s.draw(i, rng)?;
            let row: Vec<f64> = (0..p).map(|j| d.diff(j)).collect();
            acc.push(&row);
            Ok(())
        })?;
        for j in 0..p {
            let est = lambda[i] * acc.mean(j);
            let se = lambda[i] * acc.stderr(j);
            let diff = est - sigma_target.get(i, j);
            estimate[i][j] = est;
            stderr[i][j] = se;
            z[i][j] = if se > 0.0 {
                diff / se
            } else if diff.abs() <= 1e-12 * est.abs().max(1.0) {
                0.0
            } else {
                f64::INFINITY
            };
        }
    }
    let max_abs_z = z.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(CovarianceIdentityReport {
        estimate,
        stderr,
        z,
        max_abs_z,
        pass: max_abs_z <= Z_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::size_bias::{DiscreteDistribution, IndependentIndicators, IndependentSumCoupler, IndicatorCollectionCoupler};
    use proptest::prelude::*;

    fn uni(lambda: f64, sigma2: f64, vc: f64, msd: f64) -> UnivariateCouplingStats {
        UnivariateCouplingStats {
            lambda,
            sigma2,
            var_cond: vc,
            mean_sq_diff: msd,
            var_cond_stderr: 0.0,
            mean_sq_diff_stderr: 0.0,
        }
    }

    fn multi(p: usize, sigma: SymMatrix, lambda: f64, vc: f64, ac: f64) -> MultivariateCouplingStats {
        MultivariateCouplingStats {
            p,
            lambda: vec![lambda; p],
            sigma,
            var_cond: vec![vec![vc; p]; p],
            abs_cross: vec![vec![vec![ac; p]; p]; p],
            var_cond_stderr: vec![vec![0.0; p]; p],
            abs_cross_stderr: vec![vec![vec![0.0; p]; p]; p],
            conditioning: "test".into(),
        }
    }

    fn local(p: usize, sigma: SymMatrix, t1: f64, t2: f64, t3: f64) -> LocalDepStats {
        LocalDepStats {
            p,
            sigma,
            t1: vec![vec![t1; p]; p],
            t2,
            t3: vec![vec![vec![t3; p]; p]; p],
            t1_stderr: vec![vec![0.0; p]; p],
            t2_stderr: 0.0,
            t3_stderr: vec![vec![vec![0.0; p]; p]; p],
            neighborhoods: None,
        }
    }

    #[test]
    fn univariate_size_bias_examples() {
        assert_eq!(bound_thm_univariate_sb(&uni(1.0, 1.0, 0.0, 0.0), 1.0, 1.0).unwrap().total, 0.0);
        let r = bound_thm_univariate_sb(&uni(1.0, 1.0, 0.04, 0.1), 1.0, 1.0).unwrap();
        assert!((r.total - 0.5).abs() < 1e-15);
        let a = bound_thm_univariate_sb(&uni(2.0, 3.0, 0.5, 0.2), 1.0, 0.0).unwrap().total;
        let b = bound_thm_univariate_sb(&uni(2.0, 3.0, 0.5, 0.2), 2.0, 0.0).unwrap().total;
        assert!((b - 2.0 * a).abs() < 1e-15);
        assert_eq!(
            bound_thm_univariate_sb(&uni(1.0, 1.0, 0.0, 0.0), f64::INFINITY, 1.0),
            Err(Error::NonfiniteNorm { name: "h" })
        );
    }

    #[test]
    fn multivariate_size_bias_examples() {
        let s = multi(1, SymMatrix::identity(1), 1.0, 0.04, 0.1);
        let r = bound_thm_multivariate_sb(&s, 2.0, 6.0).unwrap();
        assert!((r.total - 0.3).abs() < 1e-15);
        assert_eq!(bound_thm_multivariate_sb(&multi(2, SymMatrix::identity(2), 1.0, 0.0, 0.0), 1.0, 1.0).unwrap().total, 0.0);
        // ‖Σ^{-1/2}‖ → t‖Σ^{-1/2}‖ via Σ → Σ/t²
        let t: f64 = 2.0;
        let base = bound_thm_multivariate_sb(&multi(1, SymMatrix::identity(1), 1.0, 0.04, 0.1), 2.0, 6.0).unwrap();
        let scaled = bound_thm_multivariate_sb(&multi(1, SymMatrix::identity(1).scaled(1.0 / (t * t)), 1.0, 0.04, 0.1), 2.0, 6.0).unwrap();
        assert!((scaled.terms[0].value - t * t * base.terms[0].value).abs() < 1e-13);
        assert!((scaled.terms[1].value - t.powi(3) * base.terms[1].value).abs() < 1e-13);
        let bad = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            bound_thm_multivariate_sb(&multi(2, bad, 1.0, 0.0, 0.0), 1.0, 1.0),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn univariate_local_example() {
        let s = UnivariateLocalStats {
            sigma2: 1.0,
            centered_square: 0.09,
            cond_abs: 0.1,
            triple: 0.2,
            stderrs: [0.0; 3],
        };
        let r = bound_thm_univariate_local(&s, 1.0, 1.0).unwrap();
        assert!((r.total - (0.6 + FRAC_PI_2.sqrt() * 0.1 + 0.2)).abs() < 1e-15);
        assert!((r.total - 0.9253).abs() < 1e-4);
    }

    #[test]
    fn multivariate_local_examples() {
        assert_eq!(bound_thm_multivariate_local(&local(2, SymMatrix::identity(2), 0.0, 0.0, 0.0), 1.0, 1.0, 1.0).unwrap().total, 0.0);
        let r = bound_thm_multivariate_local(&local(1, SymMatrix::identity(1), 0.3, 0.1, 0.2), 1.0, 1.0, 1.0).unwrap();
        assert!((r.total - (0.5 * 0.3 + 0.1 + 0.2 / 6.0)).abs() < 1e-15);
        let mut s = local(1, SymMatrix::identity(1), 0.0, 0.0, 0.0);
        s.neighborhoods = Some(vec![vec![0, 1], vec![1]]);
        assert_eq!(bound_thm_multivariate_local(&s, 1.0, 1.0, 1.0), Err(Error::AsymmetricNeighborhoods(1, 0)));
    }

    #[test]
    fn p1_multivariate_matches_hand_expansion() {
        let sigma = SymMatrix::identity(1).scaled(2.5);
        let s = multi(1, sigma, 1.7, 0.3, 0.8);
        let n = 1.0 / 2.5f64.sqrt();
        let want = 0.5 * n * n * 1.3 * 1.7 * 0.3f64.sqrt() + n.powi(3) / 6.0 * 0.9 * 1.7 * 0.8;
        let got = bound_thm_multivariate_sb(&s, 1.3, 0.9).unwrap().total;
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn covariance_identity_examples() {
        let c = IndependentSumCoupler::new(vec![DiscreteDistribution::bernoulli(0.5).unwrap(); 2]).unwrap();
        let r = covariance_identity_check(&c, &SymMatrix::identity(1).scaled(0.5), 100_000, &StreamConfig::new(2)).unwrap();
        assert!(r.pass, "{r:?}");
        let sure = IndicatorCollectionCoupler::new(
            Box::new(IndependentIndicators::new(vec![1.0; 3]).unwrap()),
            vec![vec![0, 1, 2]],
        )
        .unwrap();
        let r = covariance_identity_check(&sure, &SymMatrix::identity(1).scaled(0.0), 1000, &StreamConfig::new(2)).unwrap();
        assert_eq!(r.max_abs_z, 0.0);
    }

    fn hand_thm13(p: usize, nrm: f64, d2: f64, d3: f64, l: &[f64], vc: &[f64], ac: &[f64]) -> f64 {
        let pf = p as f64;
        let mut a = 0.0;
        let mut b = 0.0;
        for i in 0..p {
            for j in 0..p {
                a += l[i] * vc[i * p + j].sqrt();
                for k in 0..p {
                    b += l[i] * ac[(i * p + j) * p + k];
                }
            }
        }
        pf.powi(2) / 2.0 * nrm.powi(2) * d2 * a + pf.powi(3) / 6.0 * nrm.powi(3) * d3 * b
    }

    proptest! {
        #[test]
        fn multivariate_sb_regression(
            diag in prop::collection::vec(0.5f64..5.0, 2),
            l in prop::collection::vec(0.1f64..10.0, 2),
            vc in prop::collection::vec(0.0f64..2.0, 4),
            ac in prop::collection::vec(0.0f64..2.0, 8),
            d2 in 0.0f64..3.0, d3 in 0.0f64..3.0,
        ) {
            let sigma = SymMatrix::diagonal(&diag);
            let mut s = multi(2, sigma.clone(), 0.0, 0.0, 0.0);
            s.lambda = l.clone();
            s.var_cond = vec![vc[0..2].to_vec(), vc[2..4].to_vec()];
            s.abs_cross = vec![
                vec![ac[0..2].to_vec(), ac[2..4].to_vec()],
                vec![ac[4..6].to_vec(), ac[6..8].to_vec()],
            ];
            let nrm = diag.iter().map(|d| 1.0 / d.sqrt()).fold(0.0, f64::max);
            let want = hand_thm13(2, nrm, d2, d3, &l, &vc, &ac);
            let got = bound_thm_multivariate_sb(&s, d2, d3).unwrap().total;
            prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0));
        }

        #[test]
        fn evaluators_are_monotone(
            base in prop::collection::vec(0.01f64..2.0, 6),
            bump in 0.0f64..1.0,
            which in 0usize..6,
        ) {
            let mut up = base.clone();
            up[which] += bump;
            let eval = |v: &[f64]| {
                let s = uni(1.0, 1.0, v[0], v[1]);
                let a = bound_thm_univariate_sb(&s, v[2], v[3]).unwrap().total;
                let m = multi(1, SymMatrix::identity(1), 1.0, v[0], v[1]);
                let b = bound_thm_multivariate_sb(&m, v[2], v[3]).unwrap().total;
                let ls = UnivariateLocalStats { sigma2: 1.0, centered_square: v[0], cond_abs: v[4], triple: v[5], stderrs: [0.0; 3] };
                let c = bound_thm_univariate_local(&ls, v[2], v[3]).unwrap().total;
                let lm = local(1, SymMatrix::identity(1), v[0], v[4], v[5]);
                let d = bound_thm_multivariate_local(&lm, v[1], v[2], v[3]).unwrap().total;
                [a, b, c, d]
            };
            let (lo, hi) = (eval(&base), eval(&up));
            for k in 0..4 {
                prop_assert!(hi[k] >= lo[k]);
            }
        }
    }
}
