//! Small dense linear algebra for the `p x p` covariance matrices that show up
//! in the bound theorems: max-norms, symmetric eigendecomposition by cyclic
//! Jacobi rotations, inverse square roots and whitening.
//!
//! The norm convention throughout is the max-abs-entry norm, for vectors,
//! matrices and higher arrays alike.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative eigenvalue floor for [`inverse_sqrt`].
pub const DEFAULT_PD_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Max absolute entry of any array.
pub fn max_abs_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// A symmetric `p x p` matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    p: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds a symmetric matrix from row-major entries, replacing `A` by
    /// `(A + Aᵀ)/2`.
    pub fn new(p: usize, data: Vec<f64>) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidConfig("matrix dimension must be >= 1".into()));
        }
        if data.len() != p * p {
            return Err(Error::DimensionMismatch {
                expected: p * p,
                got: data.len(),
            });
        }
        if let Some((idx, &value)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { idx, value });
        }
        let mut m = SymMatrix { p, data };
        for i in 0..p {
            for j in (i + 1)..p {
                let avg = 0.5 * (m.data[i * p + j] + m.data[j * p + i]);
                m.data[i * p + j] = avg;
                m.data[j * p + i] = avg;
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        let mut data = Vec::with_capacity(p * p);
        for row in rows {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(p, data)
    }

    pub fn identity(p: usize) -> Self {
        Self::diagonal(&vec![1.0; p])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let p = diag.len();
        let mut data = vec![0.0; p * p];
        for (i, d) in diag.iter().enumerate() {
            data[i * p + i] = *d;
        }
        SymMatrix { p, data }
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.p + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.p).map(|r| r.to_vec()).collect()
    }

    pub fn scaled(&self, t: f64) -> Self {
        SymMatrix {
            p: self.p,
            data: self.data.iter().map(|v| v * t).collect(),
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<Self> {
        self.check_dim(other.p)?;
        Ok(SymMatrix {
            p: self.p,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// Max absolute entry.
    pub fn max_abs(&self) -> f64 {
        max_abs_norm(&self.data)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.p);
        self.data
            .chunks(self.p)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Plain matrix product; the result need not be symmetric, so it is
    /// returned row-major.
    pub fn matmul(&self, other: &SymMatrix) -> Vec<f64> {
        let p = self.p;
        let mut out = vec![0.0; p * p];
        for i in 0..p {
            for k in 0..p {
                let a = self.get(i, k);
                for j in 0..p {
                    out[i * p + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn eigen(&self) -> Eigen {
        jacobi_eigen(self)
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        max_abs_norm(&self.eigen().values)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    fn check_dim(&self, p: usize) -> Result<()> {
        if p != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                got: p,
            });
        }
        Ok(())
    }
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors, stored as
/// columns of a row-major `p x p` array.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn jacobi_eigen(m: &SymMatrix) -> Eigen {
    let p = m.p;
    let mut a = m.data.clone();
    let mut v = vec![0.0; p * p];
    for i in 0..p {
        v[i * p + i] = 1.0;
    }
    let scale = max_abs_norm(&a).max(f64::MIN_POSITIVE);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..p)
            .flat_map(|i| ((i + 1)..p).map(move |j| (i, j)))
            .map(|(i, j)| a[i * p + j] * a[i * p + j])
            .sum();
        if off.sqrt() <= 1e-300_f64.max(f64::EPSILON * 1e-3 * scale) {
            break;
        }
        for q in 0..p {
            for r in (q + 1)..p {
                let apq = a[q * p + r];
                if apq == 0.0 {
                    continue;
                }
                let app = a[q * p + q];
                let aqq = a[r * p + r];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..p {
                    let akq = a[k * p + q];
                    let akr = a[k * p + r];
                    a[k * p + q] = c * akq - s * akr;
                    a[k * p + r] = s * akq + c * akr;
                }
                for k in 0..p {
                    let aqk = a[q * p + k];
                    let ark = a[r * p + k];
                    a[q * p + k] = c * aqk - s * ark;
                    a[r * p + k] = s * aqk + c * ark;
                }
                for k in 0..p {
                    let vkq = v[k * p + q];
                    let vkr = v[k * p + r];
                    v[k * p + q] = c * vkq - s * vkr;
                    v[k * p + r] = s * vkq + c * vkr;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| a[x * p + x].total_cmp(&a[y * p + y]));
    let values = order.iter().map(|&k| a[k * p + k]).collect();
    let mut vectors = vec![0.0; p * p];
    for (col, &k) in order.iter().enumerate() {
        for row in 0..p {
            vectors[row * p + col] = v[row * p + k];
        }
    }
    Eigen { values, vectors }
}

/// `Σ^{-1/2}` by eigendecomposition. Fails with `NotPositiveDefinite` when
/// some eigenvalue is `<= tol * λ_max`.
pub fn inverse_sqrt(sigma: &SymMatrix, tol: f64) -> Result<SymMatrix> {
    let p = sigma.p;
    let eig = sigma.eigen();
    let max_ev = eig.values.last().copied().unwrap_or(0.0);
    let min_ev = eig.values.first().copied().unwrap_or(0.0);
    if max_ev <= 0.0 || min_ev <= tol * max_ev {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min_ev,
            max_eigenvalue: max_ev,
        });
    }
    let inv_root: Vec<f64> = eig.values.iter().map(|l| 1.0 / l.sqrt()).collect();
    let mut data = vec![0.0; p * p];
    for i in 0..p {
        for j in i..p {
            let s: f64 = (0..p)
                .map(|k| eig.vectors[i * p + k] * inv_root[k] * eig.vectors[j * p + k])
                .sum();
            data[i * p + j] = s;
            data[j * p + i] = s;
        }
    }
    Ok(SymMatrix { p, data })
}

/// Maps `w` to `isqrt · (w − λ)`.
pub fn whiten_one(w: &[f64], lambda: &[f64], isqrt: &SymMatrix) -> Result<Vec<f64>> {
    let p = isqrt.dim();
    for len in [w.len(), lambda.len()] {
        if len != p {
            return Err(Error::DimensionMismatch { expected: p, got: len });
        }
    }
    let centered: Vec<f64> = w.iter().zip(lambda).map(|(a, b)| a - b).collect();
    Ok(isqrt.mul_vec(&centered))
}

/// Row-wise [`whiten_one`].
pub fn whiten(samples: &[Vec<f64>], lambda: &[f64], isqrt: &SymMatrix) -> Result<Vec<Vec<f64>>> {
    samples.iter().map(|w| whiten_one(w, lambda, isqrt)).collect()
}

/// Lower Cholesky factor (row-major), or `NotPositiveDefinite`.
pub fn cholesky(m: &SymMatrix) -> Result<Vec<f64>> {
    let p = m.p;
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::NotPositiveDefinite {
                        min_eigenvalue: s,
                        max_eigenvalue: m.max_abs(),
                    });
                }
                l[i * p + i] = s.sqrt();
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn max_abs_norm_examples() {
        assert_eq!(max_abs_norm(&[1.0, -3.0, 2.0]), 3.0);
        assert_eq!(max_abs_norm(&[0.0, 0.0]), 0.0);
        let m = SymMatrix::from_rows(&[vec![1.0, -5.0], vec![-5.0, 3.0]]).unwrap();
        assert_eq!(m.max_abs(), 5.0);
        // non-symmetric input is averaged, but the plain norm helper sees raw entries
        assert_eq!(max_abs_norm(&[1.0, -5.0, 2.0, 3.0]), 5.0);
    }

    #[test]
    fn ingestion_averages_transpose() {
        let m = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![4.0, 1.0]]).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
    }

    #[test]
    fn rejects_nonfinite_and_bad_shape() {
        assert!(matches!(
            SymMatrix::new(2, vec![1.0, f64::NAN, 0.0, 1.0]),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            SymMatrix::new(2, vec![1.0, 0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn inverse_sqrt_scalar_and_diagonal() {
        let m = inverse_sqrt(&SymMatrix::identity(2).scaled(4.0), DEFAULT_PD_TOL).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 0.5 } else { 0.0 };
                assert!(close(m.get(i, j), want, 1e-15));
            }
        }
        let m = inverse_sqrt(&SymMatrix::diagonal(&[2.0, 8.0]), DEFAULT_PD_TOL).unwrap();
        assert!(close(m.get(0, 0), 1.0 / 2f64.sqrt(), 1e-15));
        assert!(close(m.get(1, 1), 1.0 / 8f64.sqrt(), 1e-15));
        assert!(close(m.get(0, 1), 0.0, 1e-15));
    }

    #[test]
    fn inverse_sqrt_rejects_indefinite() {
        let m = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let eig = m.eigen();
        assert!(close(eig.values[0], -1.0, 1e-12));
        assert!(close(eig.values[1], 3.0, 1e-12));
        assert!(matches!(
            inverse_sqrt(&m, DEFAULT_PD_TOL),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn whiten_examples() {
        let id = SymMatrix::identity(2);
        assert_eq!(whiten_one(&[3.0, -1.0], &[0.0, 0.0], &id).unwrap(), vec![3.0, -1.0]);
        assert_eq!(whiten_one(&[3.0, 1.0], &[3.0, 1.0], &id).unwrap(), vec![0.0, 0.0]);
        let half = id.scaled(0.5);
        assert_eq!(whiten_one(&[3.0, 1.0], &[1.0, 1.0], &half).unwrap(), vec![1.0, 0.0]);
        assert!(matches!(
            whiten_one(&[1.0], &[1.0, 1.0], &id),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn whitened_gaussian_samples_are_standard() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let sigma = SymMatrix::from_rows(&[vec![4.0, 1.2], vec![1.2, 2.0]]).unwrap();
        let lambda = [10.0, -3.0];
        let l = cholesky(&sigma).unwrap();
        let isqrt = inverse_sqrt(&sigma, DEFAULT_PD_TOL).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let mut sums = [0.0; 2];
        let mut cross = [0.0; 4];
        for _ in 0..n {
            let z: [f64; 2] = [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)];
            let w = [
                lambda[0] + l[0] * z[0],
                lambda[1] + l[2] * z[0] + l[3] * z[1],
            ];
            let y = whiten_one(&w, &lambda, &isqrt).unwrap();
            for a in 0..2 {
                sums[a] += y[a];
                for b in 0..2 {
                    cross[a * 2 + b] += y[a] * y[b];
                }
            }
        }
        let nf = n as f64;
        // mean stderr ~ 1/sqrt(n); covariance entry stderr ~ sqrt(2/n) at most
        for a in 0..2 {
            assert!((sums[a] / nf).abs() <= 4.0 / nf.sqrt());
            for b in 0..2 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((cross[a * 2 + b] / nf - want).abs() <= 4.0 * (2.0 / nf).sqrt());
            }
        }
    }

    fn random_pd(p: usize, seed: u64, log_cond: f64) -> SymMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        // random orthogonal matrix via Jacobi of a random symmetric matrix
        let mut raw = vec![0.0; p * p];
        for v in raw.iter_mut() {
            *v = rng.random::<f64>() - 0.5;
        }
        let q = SymMatrix::new(p, raw).unwrap().eigen().vectors;
        let evs: Vec<f64> = (0..p)
            .map(|k| {
                let frac = if p == 1 { 0.0 } else { k as f64 / (p - 1) as f64 };
                10f64.powf(frac * log_cond) * (0.5 + rng.random::<f64>())
            })
            .collect();
        let mut data = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..p {
                data[i * p + j] = (0..p).map(|k| q[i * p + k] * evs[k] * q[j * p + k]).sum();
            }
        }
        SymMatrix::new(p, data).unwrap()
    }

    proptest! {
        #[test]
        fn inverse_sqrt_whitens_random_pd(p in 1usize..=8, seed in any::<u64>(), log_cond in 0.0f64..5.7) {
            let sigma = random_pd(p, seed, log_cond);
            let m = inverse_sqrt(&sigma, DEFAULT_PD_TOL).unwrap();
            let ms = m.matmul(&sigma);
            let ms = SymMatrix { p, data: ms };
            let msm = ms.matmul(&m);
            for i in 0..p {
                for j in 0..p {
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((msm[i * p + j] - want).abs() <= 1e-8, "entry {} {} = {}", i, j, msm[i * p + j]);
                    prop_assert_eq!(m.get(i, j), m.get(j, i));
                }
            }
            prop_assert!(m.min_eigenvalue() > 0.0);
        }

        #[test]
        fn jacobi_reconstructs(p in 1usize..=10, seed in any::<u64>()) {
            let a = random_pd(p, seed, 2.0);
            let e = a.eigen();
            for i in 0..p {
                for j in 0..p {
                    let r: f64 = (0..p).map(|k| e.vectors[i * p + k] * e.values[k] * e.vectors[j * p + k]).sum();
                    prop_assert!((r - a.get(i, j)).abs() <= 1e-10 * a.max_abs());
                }
            }
        }
    }
}
