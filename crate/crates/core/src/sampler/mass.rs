//! Euclidean metric for HMC: unit, diagonal, or dense, with warmup
//! estimation from posterior draws.
//!
//! The stored quantity is the inverse metric (the posterior covariance
//! estimate), regularized by shrinking toward a small multiple of the
//! identity with weight `n/(n+5)` on the sample estimate.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MetricKind {
    Unit,
    Diag,
    Dense,
}

impl std::str::FromStr for MetricKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unit" => Ok(MetricKind::Unit),
            "diag" => Ok(MetricKind::Diag),
            "dense" => Ok(MetricKind::Dense),
            other => Err(Error::invalid(format!(
                "unknown metric '{other}' (expected unit, diag or dense)"
            ))),
        }
    }
}

/// Mass matrix `M` over the flattened parameter vector; `M^{-1}` estimates
/// the posterior covariance.
#[derive(Debug, Clone)]
pub enum MassMatrix {
    Unit {
        dim: usize,
    },
    /// Diagonal of the inverse metric.
    Diag { inv_diag: Vec<f64> },
    /// Inverse metric and its lower Cholesky factor.
    Dense { inv: Array2<f64>, chol: Array2<f64> },
}

impl MassMatrix {
    pub fn unit(dim: usize) -> Self {
        MassMatrix::Unit { dim }
    }

    pub fn dim(&self) -> usize {
        match self {
            MassMatrix::Unit { dim } => *dim,
            MassMatrix::Diag { inv_diag } => inv_diag.len(),
            MassMatrix::Dense { inv, .. } => inv.nrows(),
        }
    }

    /// Draw momentum from `N(0, M)`.
    pub fn sample_momentum<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.dim()).map(|_| StandardNormal.sample(rng)).collect();
        match self {
            MassMatrix::Unit { .. } => z,
            MassMatrix::Diag { inv_diag } => z
                .iter()
                .zip(inv_diag)
                .map(|(zi, vi)| zi / vi.sqrt())
                .collect(),
            MassMatrix::Dense { chol, .. } => {
                // Solve L^T p = z so that Cov(p) = (L L^T)^{-1} = M.
                let n = z.len();
                let mut p = vec![0.0; n];
                for i in (0..n).rev() {
                    let mut s = z[i];
                    for j in (i + 1)..n {
                        s -= chol[[j, i]] * p[j];
                    }
                    p[i] = s / chol[[i, i]];
                }
                p
            }
        }
    }

    /// `M^{-1} p`, the velocity used in the drift step and U-turn checks.
    pub fn velocity(&self, p: &[f64]) -> Vec<f64> {
        match self {
            MassMatrix::Unit { .. } => p.to_vec(),
            MassMatrix::Diag { inv_diag } => p.iter().zip(inv_diag).map(|(a, b)| a * b).collect(),
            MassMatrix::Dense { inv, .. } => {
                let n = p.len();
                let mut out = vec![0.0; n];
                for i in 0..n {
                    let mut s = 0.0;
                    for j in 0..n {
                        s += inv[[i, j]] * p[j];
                    }
                    out[i] = s;
                }
                out
            }
        }
    }

    /// Kinetic energy `p^T M^{-1} p / 2`.
    pub fn kinetic(&self, p: &[f64]) -> f64 {
        0.5 * p.iter().zip(self.velocity(p)).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Lower Cholesky factor; fails on non-positive-definite input.
pub(crate) fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::numerical("matrix is not positive definite"));
                }
                l[[i, j]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Estimate the metric from warmup draws.
///
/// Fewer than 10 draws falls back to the unit metric; the boolean reports
/// that fallback so callers can log it. `dim` is required because the draw
/// window may be empty.
pub fn adapt_metric(draws: &[Vec<f64>], kind: MetricKind, dim: usize) -> (MassMatrix, bool) {
    if kind == MetricKind::Unit {
        return (MassMatrix::unit(dim), false);
    }
    let n = draws.len();
    if n < 10 {
        return (MassMatrix::unit(dim), true);
    }
    let nf = n as f64;
    let shrink = nf / (nf + 5.0);
    let floor = 1e-3 * (5.0 / (nf + 5.0));
    let mut mean = vec![0.0; dim];
    for d in draws {
        for (m, v) in mean.iter_mut().zip(d) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= nf);
    match kind {
        MetricKind::Diag => {
            let mut var = vec![0.0; dim];
            for d in draws {
                for ((v, x), m) in var.iter_mut().zip(d).zip(&mean) {
                    let c = x - m;
                    *v += c * c;
                }
            }
            let inv_diag: Vec<f64> = var
                .iter()
                .map(|v| shrink * v / (nf - 1.0) + floor)
                .collect();
            (MassMatrix::Diag { inv_diag }, false)
        }
        MetricKind::Dense => {
            let mut cov = Array2::<f64>::zeros((dim, dim));
            for d in draws {
                for i in 0..dim {
                    let ci = d[i] - mean[i];
                    for j in 0..=i {
                        cov[[i, j]] += ci * (d[j] - mean[j]);
                    }
                }
            }
            for i in 0..dim {
                for j in 0..=i {
                    let v = shrink * cov[[i, j]] / (nf - 1.0) + if i == j { floor } else { 0.0 };
                    cov[[i, j]] = v;
                    cov[[j, i]] = v;
                }
            }
            match cholesky(&cov) {
                Ok(chol) => (MassMatrix::Dense { inv: cov, chol }, false),
                Err(_) => (MassMatrix::unit(dim), true),
            }
        }
        MetricKind::Unit => unreachable!(),
    }
}
