//! Conditional PDF/CDF/quantile prediction from a fitted model.
//!
//! A fitted model carries one weight set (MLE/MAP) or `S` posterior weight
//! sets (MCMC). Point predictions average the functional over the stored
//! weight sets: pointwise values for PDF and CDF, per-sample quantiles for
//! the QF (weights are non-identified; functionals are the meaningful
//! quantities). Quantiles are obtained by bisecting the CDF, which is
//! continuous and nondecreasing, so quantile curves never cross.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::basis::SplineBasis;
use crate::error::{Error, Result};
use crate::network::{forward, NetworkShape, WeightSet};
use crate::priors::PriorConfig;

pub const QUANTILE_TOL: f64 = 1e-8;
pub const QUANTILE_MAX_ITER: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Mle,
    Map,
    Mcmc,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Mle => "MLE",
            Method::Map => "MAP",
            Method::Mcmc => "MCMC",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MLE" => Ok(Method::Mle),
            "MAP" => Ok(Method::Map),
            "MCMC" => Ok(Method::Mcmc),
            other => Err(Error::invalid(format!(
                "unknown method '{other}' (expected MLE, MAP or MCMC)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictKind {
    Pdf,
    Cdf,
    Qf,
}

impl std::str::FromStr for PredictKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "PDF" => Ok(PredictKind::Pdf),
            "CDF" => Ok(PredictKind::Cdf),
            "QF" => Ok(PredictKind::Qf),
            other => Err(Error::invalid(format!(
                "unknown prediction kind '{other}' (expected PDF, CDF or QF)"
            ))),
        }
    }
}

/// Min-max transformation record mapping original scales to `[0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub enabled: bool,
    pub x_min: Vec<f64>,
    pub x_max: Vec<f64>,
    pub y_min: f64,
    pub y_max: f64,
}

impl Normalization {
    /// Identity record for data already on `[0,1]`.
    pub fn identity(p: usize) -> Self {
        Normalization {
            enabled: false,
            x_min: vec![0.0; p],
            x_max: vec![1.0; p],
            y_min: 0.0,
            y_max: 1.0,
        }
    }

    /// Fit the min-max ranges from training data.
    pub fn fit(x: &Array2<f64>, y: &[f64]) -> Result<Self> {
        let p = x.ncols();
        let mut x_min = vec![f64::INFINITY; p];
        let mut x_max = vec![f64::NEG_INFINITY; p];
        for row in x.rows() {
            for (j, &v) in row.iter().enumerate() {
                x_min[j] = x_min[j].min(v);
                x_max[j] = x_max[j].max(v);
            }
        }
        let y_min = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let y_max = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for j in 0..p {
            if !(x_max[j] > x_min[j]) {
                return Err(Error::invalid(format!(
                    "covariate {j} is constant; min-max normalization is undefined"
                )));
            }
        }
        if !(y_max > y_min) {
            return Err(Error::invalid("response is constant; min-max normalization is undefined"));
        }
        Ok(Normalization { enabled: true, x_min, x_max, y_min, y_max })
    }

    pub fn y_width(&self) -> f64 {
        if self.enabled {
            self.y_max - self.y_min
        } else {
            1.0
        }
    }

    /// Map an external covariate row onto `[0,1]^p`, clamping out-of-range
    /// queries. Returns the internal row and whether clamping occurred.
    pub fn x_to_internal(&self, row: &[f64]) -> (Vec<f64>, bool) {
        if !self.enabled {
            return (row.to_vec(), false);
        }
        let mut clamped = false;
        let out = row
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let t = (v - self.x_min[j]) / (self.x_max[j] - self.x_min[j]);
                if !(0.0..=1.0).contains(&t) {
                    clamped = true;
                }
                t.clamp(0.0, 1.0)
            })
            .collect();
        (out, clamped)
    }

    /// Map an external response value onto `[0,1]`, clamping.
    pub fn y_to_internal(&self, y: f64) -> (f64, bool) {
        if !self.enabled {
            return (y, false);
        }
        let t = (y - self.y_min) / (self.y_max - self.y_min);
        (t.clamp(0.0, 1.0), !(0.0..=1.0).contains(&t))
    }

    pub fn y_to_external(&self, y01: f64) -> f64 {
        if self.enabled {
            self.y_min + y01 * (self.y_max - self.y_min)
        } else {
            y01
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.enabled {
            if self.x_min.iter().zip(&self.x_max).any(|(a, b)| !(b > a)) {
                return Err(Error::invalid("normalization requires x_max > x_min componentwise"));
            }
            if !(self.y_max > self.y_min) {
                return Err(Error::invalid("normalization requires y_max > y_min"));
            }
        }
        Ok(())
    }
}

/// Per-epoch record of an Adam fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerLog {
    pub train_loss: Vec<f64>,
    pub valid_loss: Vec<f64>,
    pub best_epoch: usize,
    pub best_valid_loss: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub elapsed_secs: f64,
}

/// Per-iteration record of an MCMC run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerLog {
    pub loglik: Vec<f64>,
    pub accept_stat: Vec<f64>,
    pub tree_depth: Vec<u32>,
    pub divergences: u64,
    pub mean_accept: f64,
    pub target_accept: f64,
    pub stepsize: f64,
    pub warmup: usize,
    pub thin: usize,
    pub warnings: Vec<String>,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainingLog {
    Optimizer(OptimizerLog),
    Sampler(SamplerLog),
}

/// Everything needed to predict: architecture, basis, normalization record,
/// and one point-estimate weight set or `S` posterior weight sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub shape: NetworkShape,
    pub basis: SplineBasis,
    pub method: Method,
    pub weights: Vec<WeightSet>,
    pub normalization: Normalization,
    pub prior: Option<PriorConfig>,
    pub log: TrainingLog,
    pub seed: u64,
}

/// Curves over a grid of abscissae: posterior means plus optional pointwise
/// credible bands and the full per-sample array.
#[derive(Debug, Clone)]
pub struct PredictionResult {
    pub kind: PredictKind,
    /// Abscissae: response values (external scale) for PDF/CDF, quantile
    /// levels for QF.
    pub grid: Vec<f64>,
    pub mean: Array2<f64>,
    pub lower: Option<Array2<f64>>,
    pub upper: Option<Array2<f64>>,
    pub samples: Option<Vec<Array2<f64>>>,
    /// True when any query point was clamped into the observed ranges.
    pub clamped: bool,
}

/// CDF value from mixture probabilities.
pub(crate) fn cdf_from_theta(basis: &SplineBasis, theta: &[f64], y: f64, buf: &mut [f64]) -> f64 {
    basis.eval_i_into(y, buf);
    buf.iter().zip(theta).map(|(i, t)| i * t).sum()
}

pub(crate) fn pdf_from_theta(basis: &SplineBasis, theta: &[f64], y: f64, buf: &mut [f64]) -> f64 {
    basis.eval_m_into(y, buf);
    buf.iter().zip(theta).map(|(m, t)| m * t).sum()
}

/// Invert the CDF by bisection on `[0,1]`. The CDF is continuous and
/// nondecreasing; Newton could stall on zero-density flats.
pub(crate) fn quantile_from_theta(basis: &SplineBasis, theta: &[f64], tau: f64, buf: &mut [f64]) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut mid = 0.5;
    for _ in 0..QUANTILE_MAX_ITER {
        mid = 0.5 * (lo + hi);
        let f = cdf_from_theta(basis, theta, mid, buf);
        if (f - tau).abs() <= QUANTILE_TOL {
            return mid;
        }
        if f < tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mid
}

/// Empirical quantile with linear interpolation between order statistics.
pub(crate) fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl FittedModel {
    /// Number of stored weight sets (1 for point estimates).
    pub fn n_samples(&self) -> usize {
        self.weights.len()
    }

    fn check_y01(&self, y: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::invalid(format!("response {y} outside [0,1] on the internal scale")));
        }
        Ok(())
    }

    /// Mixture probabilities per stored weight set at an internal-scale `x`.
    fn thetas(&self, x01: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.weights
            .iter()
            .map(|w| forward(&self.shape, w, x01))
            .collect()
    }

    /// Conditional density at internal-scale coordinates, averaged over
    /// stored weight sets.
    pub fn pdf(&self, x01: &[f64], y01: f64) -> Result<f64> {
        self.check_y01(y01)?;
        let thetas = self.thetas(x01)?;
        let mut buf = vec![0.0; self.basis.size()];
        let sum: f64 = thetas
            .iter()
            .map(|t| pdf_from_theta(&self.basis, t, y01, &mut buf))
            .sum();
        Ok(sum / thetas.len() as f64)
    }

    /// Conditional CDF at internal-scale coordinates.
    pub fn cdf(&self, x01: &[f64], y01: f64) -> Result<f64> {
        self.check_y01(y01)?;
        let thetas = self.thetas(x01)?;
        let mut buf = vec![0.0; self.basis.size()];
        let sum: f64 = thetas
            .iter()
            .map(|t| cdf_from_theta(&self.basis, t, y01, &mut buf))
            .sum();
        Ok(sum / thetas.len() as f64)
    }

    /// Conditional quantile at internal scale: the average of per-sample
    /// quantiles (the posterior-mean quantile estimator for MCMC).
    pub fn quantile(&self, x01: &[f64], tau: f64) -> Result<f64> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::invalid(format!("quantile level {tau} outside (0,1)")));
        }
        let thetas = self.thetas(x01)?;
        let mut buf = vec![0.0; self.basis.size()];
        let sum: f64 = thetas
            .iter()
            .map(|t| quantile_from_theta(&self.basis, t, tau, &mut buf))
            .sum();
        Ok(sum / thetas.len() as f64)
    }

    /// Estimated mixture coefficients (posterior mean for MCMC).
    pub fn coef(&self, x01: &[f64]) -> Result<Vec<f64>> {
        let thetas = self.thetas(x01)?;
        let k = self.shape.output;
        let mut mean = vec![0.0; k];
        for t in &thetas {
            for (m, v) in mean.iter_mut().zip(t) {
                *m += v;
            }
        }
        let s = thetas.len() as f64;
        mean.iter_mut().for_each(|v| *v /= s);
        Ok(mean)
    }

    /// External-scale density: query coordinates are mapped through the
    /// normalization record (clamped at the observed ranges) and the value
    /// is divided by the response range width (change of variables).
    pub fn pdf_external(&self, x: &[f64], y: f64) -> Result<f64> {
        let (xi, _) = self.normalization.x_to_internal(x);
        let (yi, _) = self.normalization.y_to_internal(y);
        Ok(self.pdf(&xi, yi)? / self.normalization.y_width())
    }

    pub fn cdf_external(&self, x: &[f64], y: f64) -> Result<f64> {
        let (xi, _) = self.normalization.x_to_internal(x);
        let (yi, _) = self.normalization.y_to_internal(y);
        self.cdf(&xi, yi)
    }

    pub fn quantile_external(&self, x: &[f64], tau: f64) -> Result<f64> {
        let (xi, _) = self.normalization.x_to_internal(x);
        Ok(self.normalization.y_to_external(self.quantile(&xi, tau)?))
    }

    /// External-scale quantile matrix (rows of `x` by quantile levels),
    /// averaged over stored weight sets. This is the prediction function
    /// consumed by the ALE machinery.
    pub fn quantile_matrix(&self, x: &Array2<f64>, taus: &[f64]) -> Result<Array2<f64>> {
        self.quantile_matrix_for(x, taus, None)
    }

    /// Same as [`FittedModel::quantile_matrix`] but for one stored sample.
    pub fn quantile_matrix_sample(&self, x: &Array2<f64>, taus: &[f64], sample: usize) -> Result<Array2<f64>> {
        self.quantile_matrix_for(x, taus, Some(sample))
    }

    fn quantile_matrix_for(&self, x: &Array2<f64>, taus: &[f64], sample: Option<usize>) -> Result<Array2<f64>> {
        if let Some(t) = taus.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(Error::invalid(format!("quantile level {t} outside (0,1)")));
        }
        let n = x.nrows();
        let mut out = Array2::zeros((n, taus.len()));
        let mut buf = vec![0.0; self.basis.size()];
        for (i, row) in x.rows().into_iter().enumerate() {
            let (xi, _) = self.normalization.x_to_internal(row.as_slice().expect("contiguous"));
            let thetas = match sample {
                Some(s) => vec![forward(&self.shape, &self.weights[s], &xi)?],
                None => self.thetas(&xi)?,
            };
            for (j, &tau) in taus.iter().enumerate() {
                let mut acc = 0.0;
                for t in &thetas {
                    acc += quantile_from_theta(&self.basis, t, tau, &mut buf);
                }
                out[[i, j]] = self.normalization.y_to_external(acc / thetas.len() as f64);
            }
        }
        Ok(out)
    }

    /// Reject uncertainty options on point-estimate models.
    pub(crate) fn require_mcmc(&self, what: &str) -> Result<()> {
        if self.method != Method::Mcmc {
            return Err(Error::capability(format!(
                "{what} requires posterior samples; this model was fitted with {}",
                self.method
            )));
        }
        Ok(())
    }

    /// Evaluate PDF/CDF/QF curves for each row of `x` over a grid.
    ///
    /// Without an explicit grid, PDF and CDF use 101 equally spaced response
    /// values and QF uses the 99 levels 0.01..0.99. `ci_level` and `get_all`
    /// require an MCMC model; bands are pointwise sample quantiles at levels
    /// `(1 +/- ci_level)/2`. Grids for PDF/CDF are interpreted on the
    /// external response scale.
    pub fn predict_curves(
        &self,
        x: &Array2<f64>,
        kind: PredictKind,
        grid: Option<&[f64]>,
        ci_level: Option<f64>,
        get_all: bool,
    ) -> Result<PredictionResult> {
        if x.ncols() != self.shape.input {
            return Err(Error::invalid(format!(
                "prediction rows have {} covariates, model expects {}",
                x.ncols(),
                self.shape.input
            )));
        }
        if ci_level.is_some() {
            self.require_mcmc("ci_level")?;
        }
        if get_all {
            self.require_mcmc("get_all")?;
        }
        if let Some(ci) = ci_level {
            if !(ci > 0.0 && ci < 1.0) {
                return Err(Error::invalid(format!("ci_level {ci} outside (0,1)")));
            }
        }
        let mut clamped = false;
        // Internal evaluation grid plus the external abscissae to report.
        let (grid_internal, grid_external): (Vec<f64>, Vec<f64>) = match (kind, grid) {
            (PredictKind::Qf, None) => {
                let taus: Vec<f64> = (1..=99).map(|i| i as f64 / 100.0).collect();
                (taus.clone(), taus)
            }
            (PredictKind::Qf, Some(g)) => {
                if let Some(t) = g.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
                    return Err(Error::invalid(format!("quantile level {t} outside (0,1)")));
                }
                (g.to_vec(), g.to_vec())
            }
            (_, None) => {
                let ys: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
                let ext = ys.iter().map(|&v| self.normalization.y_to_external(v)).collect();
                (ys, ext)
            }
            (_, Some(g)) => {
                let mut internal = Vec::with_capacity(g.len());
                for &v in g {
                    let (yi, cl) = self.normalization.y_to_internal(v);
                    clamped |= cl;
                    internal.push(yi);
                }
                (internal, g.to_vec())
            }
        };

        let n = x.nrows();
        let g = grid_internal.len();
        let s_count = self.n_samples();
        let width = self.normalization.y_width();
        let k = self.basis.size();
        let mut buf = vec![0.0; k];

        // Basis values are shared across observations and samples.
        let basis_rows: Option<Array2<f64>> = match kind {
            PredictKind::Pdf => {
                let mut m = Array2::zeros((g, k));
                for (r, &y) in grid_internal.iter().enumerate() {
                    self.basis.eval_m_into(y, &mut buf);
                    m.row_mut(r).iter_mut().zip(&buf).for_each(|(d, &s)| *d = s);
                }
                Some(m)
            }
            PredictKind::Cdf => {
                let mut m = Array2::zeros((g, k));
                for (r, &y) in grid_internal.iter().enumerate() {
                    self.basis.eval_i_into(y, &mut buf);
                    m.row_mut(r).iter_mut().zip(&buf).for_each(|(d, &s)| *d = s);
                }
                Some(m)
            }
            PredictKind::Qf => None,
        };

        let mut per_sample: Vec<Array2<f64>> = Vec::with_capacity(s_count);
        for _ in 0..s_count {
            per_sample.push(Array2::zeros((n, g)));
        }
        for (i, row) in x.rows().into_iter().enumerate() {
            let (xi, cl) = self.normalization.x_to_internal(row.as_slice().expect("contiguous"));
            clamped |= cl;
            for (s, w) in self.weights.iter().enumerate() {
                let theta = forward(&self.shape, w, &xi)?;
                match kind {
                    PredictKind::Pdf => {
                        let basis_rows = basis_rows.as_ref().unwrap();
                        for j in 0..g {
                            let v: f64 = basis_rows.row(j).iter().zip(&theta).map(|(m, t)| m * t).sum();
                            per_sample[s][[i, j]] = v / width;
                        }
                    }
                    PredictKind::Cdf => {
                        let basis_rows = basis_rows.as_ref().unwrap();
                        for j in 0..g {
                            per_sample[s][[i, j]] =
                                basis_rows.row(j).iter().zip(&theta).map(|(m, t)| m * t).sum();
                        }
                    }
                    PredictKind::Qf => {
                        for (j, &tau) in grid_internal.iter().enumerate() {
                            let q = quantile_from_theta(&self.basis, &theta, tau, &mut buf);
                            per_sample[s][[i, j]] = self.normalization.y_to_external(q);
                        }
                    }
                }
            }
        }

        let mut mean = Array2::zeros((n, g));
        for m in &per_sample {
            mean += m;
        }
        mean /= s_count as f64;

        let (lower, upper) = if let Some(ci) = ci_level {
            let (pl, pu) = ((1.0 - ci) / 2.0, (1.0 + ci) / 2.0);
            let mut lo = Array2::zeros((n, g));
            let mut up = Array2::zeros((n, g));
            let mut vals = vec![0.0; s_count];
            for i in 0..n {
                for j in 0..g {
                    for (s, m) in per_sample.iter().enumerate() {
                        vals[s] = m[[i, j]];
                    }
                    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    lo[[i, j]] = quantile_type7(&vals, pl);
                    up[[i, j]] = quantile_type7(&vals, pu);
                }
            }
            (Some(lo), Some(up))
        } else {
            (None, None)
        };

        Ok(PredictionResult {
            kind,
            grid: grid_external,
            mean,
            lower,
            upper,
            samples: if get_all { Some(per_sample) } else { None },
            clamped,
        })
    }
}

/// Mean of each column across a set of equally shaped matrices.
#[allow(dead_code)]
pub(crate) fn stack_mean(mats: &[Array2<f64>]) -> Array2<f64> {
    let mut acc = mats[0].clone();
    for m in &mats[1..] {
        acc += m;
    }
    acc /= mats.len() as f64;
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::SplineBasis;
    use crate::network::test_support::random_weights;
    use crate::network::Activation;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn point_model(shape: NetworkShape, w: WeightSet) -> FittedModel {
        let basis = SplineBasis::new(shape.output).unwrap();
        FittedModel {
            normalization: Normalization::identity(shape.input),
            basis,
            method: Method::Mle,
            weights: vec![w],
            prior: None,
            log: TrainingLog::Optimizer(OptimizerLog {
                train_loss: vec![],
                valid_loss: vec![],
                best_epoch: 0,
                best_valid_loss: 0.0,
                lr: 0.01,
                batch_size: 128,
                elapsed_secs: 0.0,
            }),
            seed: 0,
            shape,
        }
    }

    fn random_model(seed: u64, k: usize) -> FittedModel {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let shape = NetworkShape::new(2, vec![4], k, Activation::Tanh).unwrap();
        let w = random_weights(&shape, 1.5, &mut rng);
        point_model(shape, w)
    }

    /// Model whose mixture puts essentially all mass on one component.
    fn degenerate_model(k: usize, comp: usize) -> FittedModel {
        let shape = NetworkShape::new(1, vec![2], k, Activation::Tanh).unwrap();
        let mut w = WeightSet::zeros(&shape);
        w.layers[1][[comp, 0]] = 500.0;
        point_model(shape, w)
    }

    #[test]
    fn zero_weight_pdf_at_origin() {
        let shape = NetworkShape::new(2, vec![3], 10, Activation::Tanh).unwrap();
        let m = point_model(shape, WeightSet::zeros(&NetworkShape::new(2, vec![3], 10, Activation::Tanh).unwrap()));
        assert_abs_diff_eq!(m.pdf(&[0.3, 0.7], 0.0).unwrap(), 1.8, epsilon = 1e-12);
    }

    #[test]
    fn pdf_integrates_to_one() {
        // The mixture density is piecewise linear, so trapezoid quadrature on
        // a knot-refined grid is exact.
        for seed in 0..5 {
            let m = random_model(seed, 9);
            let x = [0.25, 0.5];
            let mut grid: Vec<f64> = (0..=2000).map(|i| i as f64 / 2000.0).collect();
            grid.extend(m.basis.knots().iter().copied());
            grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
            grid.dedup();
            let mut total = 0.0;
            let mut prev = m.pdf(&x, grid[0]).unwrap();
            for w in grid.windows(2) {
                let cur = m.pdf(&x, w[1]).unwrap();
                total += 0.5 * (w[1] - w[0]) * (prev + cur);
                prev = cur;
            }
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn cdf_endpoints_and_quadrature() {
        let m = random_model(3, 8);
        let x = [0.1, 0.9];
        assert_abs_diff_eq!(m.cdf(&x, 0.0).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.cdf(&x, 1.0).unwrap(), 1.0, epsilon = 1e-12);
        // CDF equals the running integral of the PDF.
        for &y in &[0.17, 0.42, 0.77] {
            let mut grid: Vec<f64> = (0..=4000).map(|i| i as f64 * y / 4000.0).collect();
            grid.extend(m.basis.knots().iter().filter(|&&t| t < y).copied());
            grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
            grid.dedup();
            let mut total = 0.0;
            let mut prev = m.pdf(&x, grid[0]).unwrap();
            for w in grid.windows(2) {
                let cur = m.pdf(&x, w[1]).unwrap();
                total += 0.5 * (w[1] - w[0]) * (prev + cur);
                prev = cur;
            }
            assert_abs_diff_eq!(m.cdf(&x, y).unwrap(), total, epsilon = 1e-8);
        }
    }

    #[test]
    fn degenerate_component_closed_forms() {
        // theta = e_1 with K = 10: CDF(1/18) = 0.75 and the median solves
        // 1 - (1 - 9y)^2 = 1/2.
        let m = degenerate_model(10, 0);
        assert_abs_diff_eq!(m.cdf(&[0.5], 1.0 / 18.0).unwrap(), 0.75, epsilon = 1e-9);
        let want = (1.0 - 0.5f64.sqrt()) / 9.0;
        assert_abs_diff_eq!(m.quantile(&[0.5], 0.5).unwrap(), want, epsilon = 1e-7);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        for seed in 0..10 {
            let m = random_model(seed, 7);
            let x = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            for i in 1..20 {
                let tau = i as f64 / 20.0;
                let q = m.quantile(&x, tau).unwrap();
                assert!((m.cdf(&x, q).unwrap() - tau).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn quantiles_never_cross() {
        for seed in 0..20 {
            let m = random_model(seed, 11);
            let mut rng = ChaCha20Rng::seed_from_u64(1000 + seed);
            let x = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let mut prev = 0.0;
            for i in 1..=99 {
                let q = m.quantile(&x, i as f64 / 100.0).unwrap();
                assert!(q >= prev - 1e-12, "seed {seed}: crossing at tau={}", i as f64 / 100.0);
                prev = q;
            }
        }
    }

    #[test]
    fn tau_domain_errors() {
        let m = random_model(1, 6);
        assert!(m.quantile(&[0.5, 0.5], 0.0).is_err());
        assert!(m.quantile(&[0.5, 0.5], 1.0).is_err());
        assert!(m.pdf(&[0.5, 0.5], 1.5).is_err());
    }

    #[test]
    fn coef_uniform_for_zero_weights() {
        let shape = NetworkShape::new(2, vec![3], 8, Activation::Tanh).unwrap();
        let m = point_model(shape.clone(), WeightSet::zeros(&shape));
        let c = m.coef(&[0.2, 0.4]).unwrap();
        for v in &c {
            assert_abs_diff_eq!(*v, 0.125, epsilon = 1e-14);
        }
    }

    #[test]
    fn coef_sums_to_one_and_mcmc_mean_of_identical_samples() {
        let m = random_model(7, 9);
        let c = m.coef(&[0.3, 0.3]).unwrap();
        assert_abs_diff_eq!(c.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let mut mc = m.clone();
        mc.method = Method::Mcmc;
        mc.weights = vec![m.weights[0].clone(); 5];
        let cm = mc.coef(&[0.3, 0.3]).unwrap();
        for (a, b) in c.iter().zip(&cm) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
        }
        // Posterior-mean QF of identical samples equals the point QF exactly.
        assert_eq!(
            m.quantile(&[0.3, 0.3], 0.25).unwrap(),
            mc.quantile(&[0.3, 0.3], 0.25).unwrap()
        );
    }

    #[test]
    fn predict_curves_defaults_and_monotonicity() {
        let m = random_model(4, 10);
        let x = Array2::from_shape_vec((3, 2), vec![0.1, 0.2, 0.5, 0.5, 0.9, 0.8]).unwrap();
        let pdf = m.predict_curves(&x, PredictKind::Pdf, None, None, false).unwrap();
        assert_eq!(pdf.grid.len(), 101);
        let cdf = m.predict_curves(&x, PredictKind::Cdf, None, None, false).unwrap();
        for row in cdf.mean.rows() {
            for w in row.as_slice().unwrap().windows(2) {
                assert!(w[1] >= w[0] - 1e-12);
            }
        }
        let qf = m.predict_curves(&x, PredictKind::Qf, None, None, false).unwrap();
        assert_eq!(qf.grid.len(), 99);
        for row in qf.mean.rows() {
            for w in row.as_slice().unwrap().windows(2) {
                assert!(w[1] >= w[0] - 1e-12);
            }
        }
    }

    #[test]
    fn predict_curve_bands_are_empirical_quantiles() {
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let shape = NetworkShape::new(2, vec![4], 7, Activation::Tanh).unwrap();
        let weights: Vec<WeightSet> = (0..40).map(|_| random_weights(&shape, 1.0, &mut rng)).collect();
        let mut m = point_model(shape, weights[0].clone());
        m.method = Method::Mcmc;
        m.weights = weights;
        let x = Array2::from_shape_vec((2, 2), vec![0.2, 0.3, 0.6, 0.7]).unwrap();
        let res = m
            .predict_curves(&x, PredictKind::Cdf, None, Some(0.95), true)
            .unwrap();
        let samples = res.samples.as_ref().unwrap();
        assert_eq!(samples.len(), 40);
        let (i, j) = (1, 50);
        let mut vals: Vec<f64> = samples.iter().map(|s| s[[i, j]]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(res.lower.as_ref().unwrap()[[i, j]], quantile_type7(&vals, 0.025), epsilon = 1e-15);
        assert_abs_diff_eq!(res.upper.as_ref().unwrap()[[i, j]], quantile_type7(&vals, 0.975), epsilon = 1e-15);
        let mean = res.mean[[i, j]];
        assert!(res.lower.as_ref().unwrap()[[i, j]] <= mean && mean <= res.upper.as_ref().unwrap()[[i, j]]);
    }

    #[test]
    fn uncertainty_needs_mcmc() {
        let m = random_model(2, 6);
        let x = Array2::from_shape_vec((1, 2), vec![0.5, 0.5]).unwrap();
        let err = m
            .predict_curves(&x, PredictKind::Pdf, None, Some(0.9), false)
            .unwrap_err();
        match err {
            Error::Capability(msg) => assert!(msg.contains("MLE"), "{msg}"),
            other => panic!("expected capability error, got {other}"),
        }
        assert!(m.predict_curves(&x, PredictKind::Pdf, None, None, true).is_err());
    }

    #[test]
    fn normalization_jacobian_and_round_trip() {
        // Width-2 response range: internal density 1 maps to external 0.5.
        let shape = NetworkShape::new(1, vec![2], 10, Activation::Tanh).unwrap();
        let mut m = point_model(shape, WeightSet::zeros(&NetworkShape::new(1, vec![2], 10, Activation::Tanh).unwrap()));
        m.normalization = Normalization { enabled: true, x_min: vec![-1.0], x_max: vec![3.0], y_min: 1.0, y_max: 3.0 };
        let x_ext = [1.0]; // internal 0.5
        let y_ext = 2.0; // internal 0.5
        let internal = m.pdf(&[0.5], 0.5).unwrap();
        assert_abs_diff_eq!(m.pdf_external(&x_ext, y_ext).unwrap(), internal / 2.0, epsilon = 1e-12);
        // Quantile round trip: external = y_min + width * internal.
        let qi = m.quantile(&[0.5], 0.3).unwrap();
        assert_abs_diff_eq!(m.quantile_external(&x_ext, 0.3).unwrap(), 1.0 + 2.0 * qi, epsilon = 1e-10);
        // CDF is invariant under the monotone transform.
        assert_abs_diff_eq!(m.cdf_external(&x_ext, y_ext).unwrap(), m.cdf(&[0.5], 0.5).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn out_of_range_queries_are_clamped_and_flagged() {
        let mut m = random_model(5, 6);
        m.normalization = Normalization { enabled: true, x_min: vec![0.0, 0.0], x_max: vec![1.0, 1.0], y_min: 0.0, y_max: 1.0 };
        let x = Array2::from_shape_vec((1, 2), vec![1.7, 0.5]).unwrap();
        let res = m.predict_curves(&x, PredictKind::Cdf, None, None, false).unwrap();
        assert!(res.clamped);
        let x_in = Array2::from_shape_vec((1, 2), vec![0.7, 0.5]).unwrap();
        let res = m.predict_curves(&x_in, PredictKind::Cdf, None, None, false).unwrap();
        assert!(!res.clamped);
    }

    #[test]
    fn get_all_reproduces_per_sample_curves() {
        let mut rng = ChaCha20Rng::seed_from_u64(88);
        let shape = NetworkShape::new(1, vec![3], 6, Activation::Tanh).unwrap();
        let weights: Vec<WeightSet> = (0..2).map(|_| random_weights(&shape, 1.0, &mut rng)).collect();
        let mut m = point_model(shape.clone(), weights[0].clone());
        m.method = Method::Mcmc;
        m.weights = weights.clone();
        let x = Array2::from_shape_vec((1, 1), vec![0.4]).unwrap();
        let res = m.predict_curves(&x, PredictKind::Qf, None, None, true).unwrap();
        for (s, w) in weights.iter().enumerate() {
            let single = point_model(shape.clone(), w.clone());
            let alone = single.predict_curves(&x, PredictKind::Qf, None, None, false).unwrap();
            for j in 0..res.grid.len() {
                assert_eq!(res.samples.as_ref().unwrap()[s][[0, j]], alone.mean[[0, j]]);
            }
        }
    }
}
