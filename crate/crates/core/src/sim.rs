//! Beta-regression benchmark: three uniform covariates, the response drawn
//! from `Beta(10 e, 10(1-e))` with `e = expit(1 - 5 x1 x2)`. The third
//! covariate is irrelevant by construction. Closed-form conditional density,
//! CDF and quantile oracles are exposed for diagnostics and tests.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::Distribution;
use statrs::distribution::{Beta, Continuous, ContinuousCDF};

use crate::error::Result;
use crate::network::Dataset;

pub fn expit(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// Beta shape parameters at a covariate point (only the first two matter).
pub fn beta_shapes(x: &[f64]) -> (f64, f64) {
    let e = expit(1.0 - 5.0 * x[0] * x[1]);
    (10.0 * e, 10.0 * (1.0 - e))
}

/// Draw `n` rows deterministically from the benchmark model.
pub fn simulate(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, 3), |_| rng.random_range(0.0..1.0));
    let mut y = Array1::zeros(n);
    for i in 0..n {
        let (a, b) = beta_shapes(x.row(i).as_slice().expect("contiguous"));
        let beta = rand_distr::Beta::new(a, b).expect("positive shapes");
        y[i] = beta.sample(&mut rng);
    }
    Dataset::new(x, y).expect("simulated data is valid")
}

/// True conditional density of the benchmark model.
pub fn true_pdf(y: f64, x: &[f64]) -> f64 {
    let (a, b) = beta_shapes(x);
    Beta::new(a, b).expect("positive shapes").pdf(y)
}

/// True conditional CDF.
pub fn true_cdf(y: f64, x: &[f64]) -> f64 {
    let (a, b) = beta_shapes(x);
    Beta::new(a, b).expect("positive shapes").cdf(y)
}

/// True conditional quantile function.
pub fn true_quantile(tau: f64, x: &[f64]) -> f64 {
    let (a, b) = beta_shapes(x);
    Beta::new(a, b).expect("positive shapes").inverse_cdf(tau)
}

/// Quantile prediction matrix from the true model, matching the interface
/// of fitted-model predictions.
pub fn true_quantile_matrix(x: &Array2<f64>, taus: &[f64]) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((x.nrows(), taus.len()));
    for (i, row) in x.rows().into_iter().enumerate() {
        let r = row.as_slice().expect("contiguous");
        for (j, &tau) in taus.iter().enumerate() {
            out[[i, j]] = true_quantile(tau, r);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn symmetric_at_the_logit_root() {
        // x1 x2 = 0.2 makes the logit argument zero: shapes (5, 5).
        let (a, b) = beta_shapes(&[0.4, 0.5, 0.9]);
        assert_abs_diff_eq!(a, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn covariates_are_uniform() {
        let n = 20_000;
        let d = simulate(n, 7);
        for j in 0..3 {
            let mean = d.x.column(j).sum() / n as f64;
            let tol = 3.0 / (12.0 * n as f64).sqrt();
            assert!((mean - 0.5).abs() < tol, "col {j}: mean {mean}");
        }
    }

    #[test]
    fn conditional_mean_matches_expit() {
        // E(Y | x) = a/(a+b) = expit(1 - 5 x1 x2).
        let x = [0.1, 0.1, 0.5];
        let want = expit(1.0 - 0.05);
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let (a, b) = beta_shapes(&x);
        let beta = rand_distr::Beta::new(a, b).unwrap();
        let reps = 100_000;
        let mut mean = 0.0;
        for _ in 0..reps {
            mean += beta.sample(&mut rng);
        }
        mean /= reps as f64;
        // Var(Y) <= 1/4 gives a conservative Monte Carlo band.
        assert!((mean - want).abs() < 3.0 * (0.25f64 / reps as f64).sqrt() + 2e-3);
    }

    #[test]
    fn oracles_are_consistent() {
        let x = [0.3, 0.6, 0.2];
        for tau in [0.1, 0.5, 0.9] {
            let q = true_quantile(tau, &x);
            assert_abs_diff_eq!(true_cdf(q, &x), tau, epsilon = 1e-8);
        }
        // Density integrates to ~1 on a fine trapezoid grid.
        let mut total = 0.0;
        let m = 20_000;
        let mut prev = true_pdf(0.0, &x);
        for i in 1..=m {
            let y = i as f64 / m as f64;
            let cur = true_pdf(y, &x);
            total += 0.5 * (prev + cur) / m as f64;
            prev = cur;
        }
        assert!((total - 1.0).abs() < 1e-4);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = simulate(50, 3);
        let b = simulate(50, 3);
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        let c = simulate(50, 4);
        assert_ne!(a.y, c.y);
    }
}
