//! Fully Bayesian estimation: HMC/NUTS over the network weights with
//! dual-averaging step-size adaptation and warmup metric estimation,
//! interleaved with conjugate Gibbs updates of the prior scales.
//!
//! Per iteration the chain (1) makes one HMC or NUTS transition of the
//! flattened weights given the current scales, targeting log-likelihood plus
//! log-prior, then (2) redraws the scales from their conjugate conditionals.
//! Warmup adapts the step size every iteration and estimates the metric from
//! the second half of warmup in a single window; afterwards both freeze.

mod diagnostics;
mod dual_avg;
mod hmc;
mod mass;
mod nuts;

pub use diagnostics::effective_sample_size;
pub use dual_avg::{find_initial_stepsize, DualAveragingState, DA_GAMMA, DA_KAPPA, DA_T0};
pub use hmc::{hmc_transition, leapfrog, n_leapfrog_steps};
pub use mass::{adapt_metric, MassMatrix, MetricKind};
pub use nuts::nuts_transition;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::basis::SplineBasis;
use crate::error::{Error, Result};
use crate::model::{FittedModel, Method, Normalization, SamplerLog, TrainingLog};
use crate::network::{Dataset, LogLik, NetworkShape, WeightSet};
use crate::priors::{gibbs_update_scales, PriorConfig, ScaleState};

/// Energy error that flags a divergent transition.
pub const DIVERGENCE_THRESHOLD: f64 = 1000.0;

/// A differentiable (unnormalized) log-density over a flat parameter vector.
pub trait Target {
    fn dim(&self) -> usize;
    /// `-inf` is allowed and treated as out of support.
    fn log_density(&self, q: &[f64]) -> f64;
    fn log_density_grad(&self, q: &[f64]) -> (f64, Vec<f64>);
}

/// Position/momentum pair with cached log-density and gradient.
#[derive(Debug, Clone)]
pub(crate) struct PhaseState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub logp: f64,
    pub grad: Vec<f64>,
}

/// Outcome of one HMC or NUTS transition.
#[derive(Debug, Clone)]
pub struct Transition {
    pub q: Vec<f64>,
    pub logp: f64,
    /// Metropolis statistic driving dual averaging (mean over trajectory
    /// states for NUTS).
    pub accept_stat: f64,
    pub accepted: bool,
    pub divergent: bool,
    /// Doublings performed (NUTS; 0 for HMC).
    pub depth: u32,
    pub n_leapfrog: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum McmcAlgorithm {
    Hmc,
    Nuts,
}

impl std::str::FromStr for McmcAlgorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "HMC" => Ok(McmcAlgorithm::Hmc),
            "NUTS" => Ok(McmcAlgorithm::Nuts),
            other => Err(Error::invalid(format!(
                "unknown algorithm '{other}' (expected HMC or NUTS)"
            ))),
        }
    }
}

/// Sampler controls. Defaults: NUTS, 2000 iterations with 500 warmup, no
/// thinning, adapted step size, diagonal metric, target acceptance 0.9,
/// maximum tree depth 6, integration time 1.
#[derive(Debug, Clone)]
pub struct McmcControl {
    pub algorithm: McmcAlgorithm,
    pub iter: usize,
    pub warmup: usize,
    pub thin: usize,
    /// Fixed step size; `None` adapts it during warmup.
    pub stepsize: Option<f64>,
    pub metric: MetricKind,
    pub delta: f64,
    pub max_treedepth: usize,
    /// HMC integration time; the step count is `floor(int_time/eps)`.
    pub int_time: f64,
    pub seed: Option<u64>,
    pub verbose: bool,
}

impl Default for McmcControl {
    fn default() -> Self {
        McmcControl {
            algorithm: McmcAlgorithm::Nuts,
            iter: 2000,
            warmup: 500,
            thin: 1,
            stepsize: None,
            metric: MetricKind::Diag,
            delta: 0.9,
            max_treedepth: 6,
            int_time: 1.0,
            seed: None,
            verbose: false,
        }
    }
}

impl McmcControl {
    pub fn validate(&self) -> Result<()> {
        if self.warmup >= self.iter {
            return Err(Error::invalid(format!(
                "warmup ({}) must be smaller than iter ({})",
                self.warmup, self.iter
            )));
        }
        if self.thin < 1 {
            return Err(Error::invalid("thin must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta {} outside (0,1)", self.delta)));
        }
        if let Some(eps) = self.stepsize {
            if !(eps > 0.0) {
                return Err(Error::invalid("stepsize must be positive"));
            }
        }
        if !(self.int_time > 0.0) {
            return Err(Error::invalid("int_time must be positive"));
        }
        Ok(())
    }
}

/// Raw output of a generic chain run.
#[derive(Debug, Clone)]
pub struct ChainRun {
    /// Post-warmup draws after thinning.
    pub draws: Vec<Vec<f64>>,
    pub accept_stat: Vec<f64>,
    pub tree_depth: Vec<u32>,
    pub logp: Vec<f64>,
    pub divergences: u64,
    pub stepsize: f64,
    pub mean_accept: f64,
    pub warnings: Vec<String>,
}

/// Run a full adaptive chain against an arbitrary target.
///
/// `between` runs after every transition (the weight chain uses it for the
/// Gibbs block; it may mutate the target). Draw storage keeps the thin-th,
/// 2 thin-th, ... post-warmup states, so exactly
/// `floor((iter - warmup)/thin)` draws are stored.
pub fn sample<T: Target, F>(
    target: &mut T,
    control: &McmcControl,
    q0: Vec<f64>,
    rng: &mut ChaCha20Rng,
    mut between: F,
) -> Result<ChainRun>
where
    F: FnMut(&mut T, &[f64], &mut ChaCha20Rng),
{
    control.validate()?;
    let dim = target.dim();
    if q0.len() != dim {
        return Err(Error::invalid("initial point has wrong dimension"));
    }
    let mut mass = MassMatrix::unit(dim);
    let mut warnings = Vec::new();
    let mut eps = match control.stepsize {
        Some(e) => e,
        None => find_initial_stepsize(&*target, &mass, &q0, rng)?,
    };
    let mut da = DualAveragingState::new(eps);

    let mut q = q0;
    let mut draws = Vec::new();
    let mut accept_hist = Vec::with_capacity(control.iter);
    let mut depth_hist = Vec::with_capacity(control.iter);
    let mut logp_hist = Vec::with_capacity(control.iter);
    let mut divergences = 0u64;
    let mut warmup_divergences = 0usize;
    let mut metric_window: Vec<Vec<f64>> = Vec::new();
    let mut post_accept_sum = 0.0;

    for i in 0..control.iter {
        let tr = match control.algorithm {
            McmcAlgorithm::Nuts => {
                nuts_transition(&*target, &mass, &q, eps, control.max_treedepth, rng)
            }
            McmcAlgorithm::Hmc => {
                hmc_transition(&*target, &mass, &q, eps, control.int_time, rng)
            }
        };
        q = tr.q;
        if tr.divergent {
            divergences += 1;
            if i < control.warmup {
                warmup_divergences += 1;
            }
        }
        accept_hist.push(tr.accept_stat);
        depth_hist.push(tr.depth);
        logp_hist.push(tr.logp);
        between(target, &q, rng);

        if i < control.warmup {
            if control.stepsize.is_none() {
                da.advance(tr.accept_stat, control.delta);
                eps = da.current();
            }
            if i >= control.warmup / 2 && control.metric != MetricKind::Unit {
                metric_window.push(q.clone());
            }
            if i + 1 == control.warmup {
                if warmup_divergences == control.warmup {
                    return Err(Error::numerical(format!(
                        "every warmup iteration diverged (stepsize {eps:.3e}); \
                         the posterior may be degenerate"
                    )));
                }
                if control.metric != MetricKind::Unit {
                    let (m, fell_back) = adapt_metric(&metric_window, control.metric, dim);
                    if fell_back {
                        warnings.push(format!(
                            "metric adaptation fell back to unit ({} draws)",
                            metric_window.len()
                        ));
                    }
                    mass = m;
                }
                if control.stepsize.is_none() {
                    eps = da.adapted();
                }
            }
        } else {
            post_accept_sum += tr.accept_stat;
            if (i - control.warmup + 1) % control.thin == 0 {
                draws.push(q.clone());
            }
        }
    }

    let post_n = control.iter - control.warmup;
    Ok(ChainRun {
        draws,
        accept_stat: accept_hist,
        tree_depth: depth_hist,
        logp: logp_hist,
        divergences,
        stepsize: eps,
        mean_accept: post_accept_sum / post_n as f64,
        warnings,
    })
}

/// Posterior of the network weights given the current prior scales. The
/// normal prior terms enter the energy; the inverse-gamma hyperprior terms
/// are constant within a weight move and are handled by the Gibbs block.
struct WeightPosterior {
    loglik: LogLik,
    scales: ScaleState,
}

impl WeightPosterior {
    fn weight_prior_terms(&self, w: &WeightSet) -> f64 {
        const LN_2PI: f64 = 1.8378770664093453;
        let mut total = 0.0;
        for (l, m) in w.layers.iter().enumerate() {
            let s2 = self.scales.sigma2[l];
            for j in 0..m.ncols() {
                let v = s2 * self.scales.lambda2[l][j];
                let ln_v = v.ln();
                for r in 0..m.nrows() {
                    total += -0.5 * (LN_2PI + ln_v) - m[[r, j]] * m[[r, j]] / (2.0 * v);
                }
            }
        }
        total
    }
}

impl Target for WeightPosterior {
    fn dim(&self) -> usize {
        self.loglik.shape.n_params()
    }

    fn log_density(&self, q: &[f64]) -> f64 {
        let w = match WeightSet::from_flat(&self.loglik.shape, q) {
            Ok(w) => w,
            Err(_) => return f64::NEG_INFINITY,
        };
        let ll = match self.loglik.value(&w) {
            Ok(v) => v,
            Err(_) => return f64::NEG_INFINITY,
        };
        ll + self.weight_prior_terms(&w)
    }

    fn log_density_grad(&self, q: &[f64]) -> (f64, Vec<f64>) {
        let w = match WeightSet::from_flat(&self.loglik.shape, q) {
            Ok(w) => w,
            Err(_) => return (f64::NEG_INFINITY, vec![0.0; q.len()]),
        };
        let (ll, mut grad) = match self.loglik.value_grad(&w, None) {
            Ok(v) => v,
            Err(_) => return (f64::NEG_INFINITY, vec![0.0; q.len()]),
        };
        let mut logp = ll;
        for (l, m) in w.layers.iter().enumerate() {
            let s2 = self.scales.sigma2[l];
            for j in 0..m.ncols() {
                let v = s2 * self.scales.lambda2[l][j];
                let ln_v = v.ln();
                for r in 0..m.nrows() {
                    let wij = m[[r, j]];
                    logp += -0.5 * (1.8378770664093453 + ln_v) - wij * wij / (2.0 * v);
                    grad.layers[l][[r, j]] -= wij / v;
                }
            }
        }
        (logp, grad.to_flat())
    }
}

/// Fully Bayesian fit of the spline mixture model.
///
/// Stores `floor((iter - warmup)/thin)` posterior weight sets and a
/// per-iteration log of data log-likelihood, acceptance statistic, tree
/// depth and divergences.
pub fn run_chain(
    data: &Dataset,
    shape: &NetworkShape,
    basis: &SplineBasis,
    prior: &PriorConfig,
    control: &McmcControl,
) -> Result<FittedModel> {
    control.validate()?;
    prior.validate()?;
    let start = Instant::now();
    let seed = control.seed.unwrap_or_else(|| rand::rng().random());
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let loglik = LogLik::new(shape, basis, data)?;

    // Bounded random init, as in the optimizer.
    let mut w0 = WeightSet::zeros(shape);
    for m in w0.layers.iter_mut() {
        let (rows, cols) = m.dim();
        let bound = (6.0 / (rows + cols - 1) as f64).sqrt();
        for r in 0..rows {
            for c in 1..cols {
                m[[r, c]] = rng.random_range(-bound..bound);
            }
        }
    }

    let mut posterior = WeightPosterior { loglik, scales: ScaleState::init(shape) };
    let shape_for_gibbs = shape.clone();
    let prior_for_gibbs = *prior;
    let mut loglik_trace: Vec<f64> = Vec::with_capacity(control.iter);

    let run = sample(
        &mut posterior,
        control,
        w0.to_flat(),
        &mut rng,
        |post, q, rng| {
            let w = WeightSet::from_flat(&shape_for_gibbs, q).expect("dimension preserved");
            loglik_trace.push(post.loglik.value(&w).unwrap_or(f64::NEG_INFINITY));
            post.scales = gibbs_update_scales(&w, &post.scales, &shape_for_gibbs, &prior_for_gibbs, rng)
                .expect("conjugate update cannot fail on valid state");
        },
    )?;

    let weights: Vec<WeightSet> = run
        .draws
        .iter()
        .map(|q| WeightSet::from_flat(shape, q).expect("dimension preserved"))
        .collect();
    if weights.is_empty() {
        return Err(Error::invalid(
            "no post-warmup samples stored; increase iter or lower thin",
        ));
    }
    if control.verbose {
        eprintln!(
            "chain finished: {} stored samples, mean acceptance {:.3} (target {:.3}), {} divergences",
            weights.len(),
            run.mean_accept,
            control.delta,
            run.divergences
        );
    }

    Ok(FittedModel {
        shape: shape.clone(),
        basis: basis.clone(),
        method: Method::Mcmc,
        weights,
        normalization: Normalization::identity(shape.input),
        prior: Some(*prior),
        log: TrainingLog::Sampler(SamplerLog {
            loglik: loglik_trace,
            accept_stat: run.accept_stat,
            tree_depth: run.tree_depth,
            divergences: run.divergences,
            mean_accept: run.mean_accept,
            target_accept: control.delta,
            stepsize: run.stepsize,
            warmup: control.warmup,
            thin: control.thin,
            warnings: run.warnings,
            elapsed_secs: start.elapsed().as_secs_f64(),
        }),
        seed,
    })
}

#[cfg(test)]
pub(crate) mod test_targets {
    use super::Target;

    /// Standard normal in `dim` dimensions.
    pub struct StdNormal {
        pub dim: usize,
    }

    impl Target for StdNormal {
        fn dim(&self) -> usize {
            self.dim
        }
        fn log_density(&self, q: &[f64]) -> f64 {
            -0.5 * q.iter().map(|v| v * v).sum::<f64>()
        }
        fn log_density_grad(&self, q: &[f64]) -> (f64, Vec<f64>) {
            (self.log_density(q), q.iter().map(|v| -v).collect())
        }
    }

    /// 1-D potential q^2/2.
    pub struct Quadratic;

    impl Target for Quadratic {
        fn dim(&self) -> usize {
            1
        }
        fn log_density(&self, q: &[f64]) -> f64 {
            -0.5 * q[0] * q[0]
        }
        fn log_density_grad(&self, q: &[f64]) -> (f64, Vec<f64>) {
            (self.log_density(q), vec![-q[0]])
        }
    }

    /// Bivariate normal with unit variances and correlation rho.
    pub struct BivariateNormal {
        pub rho: f64,
    }

    impl Target for BivariateNormal {
        fn dim(&self) -> usize {
            2
        }
        fn log_density(&self, q: &[f64]) -> f64 {
            let d = 1.0 - self.rho * self.rho;
            -(q[0] * q[0] - 2.0 * self.rho * q[0] * q[1] + q[1] * q[1]) / (2.0 * d)
        }
        fn log_density_grad(&self, q: &[f64]) -> (f64, Vec<f64>) {
            let d = 1.0 - self.rho * self.rho;
            let g = vec![
                -(q[0] - self.rho * q[1]) / d,
                -(q[1] - self.rho * q[0]) / d,
            ];
            (self.log_density(q), g)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::test_targets::*;
    use super::*;
    use crate::network::Activation;
    use ndarray::{Array1, Array2};
    use rand_distr::Distribution;

    fn control(algorithm: McmcAlgorithm, iter: usize, warmup: usize) -> McmcControl {
        McmcControl { algorithm, iter, warmup, seed: Some(42), ..McmcControl::default() }
    }

    #[test]
    fn stored_sample_count_follows_thinning() {
        let mut target = StdNormal { dim: 2 };
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mut c = control(McmcAlgorithm::Nuts, 1000, 250);
        c.thin = 2;
        let run = sample(&mut target, &c, vec![0.0, 0.0], &mut rng, |_, _, _| {}).unwrap();
        assert_eq!(run.draws.len(), 375);
        let mut c2 = control(McmcAlgorithm::Nuts, 101, 50);
        c2.thin = 7;
        let mut rng2 = ChaCha20Rng::seed_from_u64(1);
        let run2 = sample(&mut target, &c2, vec![0.0, 0.0], &mut rng2, |_, _, _| {}).unwrap();
        assert_eq!(run2.draws.len(), 51 / 7);
    }

    #[test]
    fn nuts_calibrated_on_standard_normal() {
        let mut target = StdNormal { dim: 5 };
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let c = control(McmcAlgorithm::Nuts, 2500, 500);
        let run = sample(&mut target, &c, vec![0.5; 5], &mut rng, |_, _, _| {}).unwrap();
        for d in 0..5 {
            let series: Vec<f64> = run.draws.iter().map(|q| q[d]).collect();
            let ess = effective_sample_size(&series);
            assert!(ess >= 200.0, "dim {d}: ess {ess}");
            let mean = series.iter().sum::<f64>() / series.len() as f64;
            assert!(mean.abs() < 3.0 / ess.sqrt(), "dim {d}: mean {mean}, ess {ess}");
            let var =
                series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (series.len() - 1) as f64;
            assert!((0.9..=1.1).contains(&var), "dim {d}: var {var}");
        }
        // Dual averaging should land near the target acceptance.
        assert!(
            (run.mean_accept - 0.9).abs() < 0.1,
            "mean accept {}",
            run.mean_accept
        );
    }

    #[test]
    fn hmc_calibrated_on_standard_normal() {
        let mut target = StdNormal { dim: 5 };
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let c = control(McmcAlgorithm::Hmc, 2500, 500);
        let run = sample(&mut target, &c, vec![0.5; 5], &mut rng, |_, _, _| {}).unwrap();
        for d in 0..5 {
            let series: Vec<f64> = run.draws.iter().map(|q| q[d]).collect();
            let ess = effective_sample_size(&series);
            assert!(ess >= 200.0, "dim {d}: ess {ess}");
            let mean = series.iter().sum::<f64>() / series.len() as f64;
            assert!(mean.abs() < 3.0 / ess.sqrt(), "dim {d}: mean {mean}");
            let var =
                series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (series.len() - 1) as f64;
            assert!((0.9..=1.1).contains(&var), "dim {d}: var {var}");
        }
    }

    #[test]
    fn dense_metric_beats_unit_on_correlated_target() {
        // Strong correlation makes whitening pay for itself.
        let seed = 11;
        let ess_with = |metric: MetricKind| {
            let mut target = BivariateNormal { rho: 0.99 };
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut c = control(McmcAlgorithm::Nuts, 2500, 500);
            c.metric = metric;
            let run = sample(&mut target, &c, vec![1.0, 1.0], &mut rng, |_, _, _| {}).unwrap();
            let series: Vec<f64> = run.draws.iter().map(|q| q[0]).collect();
            effective_sample_size(&series) / series.len() as f64
        };
        let dense = ess_with(MetricKind::Dense);
        let unit = ess_with(MetricKind::Unit);
        assert!(dense > unit, "dense {dense} <= unit {unit}");
    }

    #[test]
    fn flat_likelihood_recovers_prior_scales() {
        // With a flat likelihood the block scheme targets exactly the prior:
        // lambda^2 moments must match the inverse-gamma hyperprior.
        use crate::priors::{gibbs_update_scales, PriorConfig, PriorVariant, ScaleState};

        struct FlatWithPrior {
            shape: NetworkShape,
            scales: ScaleState,
        }
        impl Target for FlatWithPrior {
            fn dim(&self) -> usize {
                self.shape.n_params()
            }
            fn log_density(&self, q: &[f64]) -> f64 {
                let w = WeightSet::from_flat(&self.shape, q).unwrap();
                let mut total = 0.0;
                for (l, m) in w.layers.iter().enumerate() {
                    for j in 0..m.ncols() {
                        let v = self.scales.sigma2[l] * self.scales.lambda2[l][j];
                        for r in 0..m.nrows() {
                            total += -0.5 * v.ln() - m[[r, j]] * m[[r, j]] / (2.0 * v);
                        }
                    }
                }
                total
            }
            fn log_density_grad(&self, q: &[f64]) -> (f64, Vec<f64>) {
                let w = WeightSet::from_flat(&self.shape, q).unwrap();
                let mut grad = WeightSet::zeros(&self.shape);
                for (l, m) in w.layers.iter().enumerate() {
                    for j in 0..m.ncols() {
                        let v = self.scales.sigma2[l] * self.scales.lambda2[l][j];
                        for r in 0..m.nrows() {
                            grad.layers[l][[r, j]] = -m[[r, j]] / v;
                        }
                    }
                }
                (self.log_density(q), grad.to_flat())
            }
        }

        let shape = NetworkShape::new(1, vec![2], 5, Activation::Tanh).unwrap();
        let cfg = PriorConfig { variant: PriorVariant::GP, a_lambda: 6.0, b_lambda: 5.0, a_sigma: 6.0, b_sigma: 5.0 };
        let mut target = FlatWithPrior { shape: shape.clone(), scales: ScaleState::init(&shape) };
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let c = McmcControl { iter: 6000, warmup: 1000, seed: Some(3), ..McmcControl::default() };
        let mut lambda_draws = Vec::new();
        let shape2 = shape.clone();
        sample(&mut target, &c, vec![0.0; shape.n_params()], &mut rng, |t, q, rng| {
            let w = WeightSet::from_flat(&shape2, q).unwrap();
            t.scales = gibbs_update_scales(&w, &t.scales, &shape2, &cfg, rng).unwrap();
            lambda_draws.push(t.scales.lambda2[0][1]);
        })
        .unwrap();
        let post: Vec<f64> = lambda_draws[1000..].to_vec();
        let mean = post.iter().sum::<f64>() / post.len() as f64;
        // Prior mean b/(a-1) = 1; the chain is autocorrelated, so compare
        // against a generous multiple of the iid standard error.
        let ess = effective_sample_size(&post).max(50.0);
        let se = (0.25f64 / ess).sqrt();
        assert!((mean - 1.0).abs() < 5.0 * se, "mean {mean}, se {se}, ess {ess}");
    }

    #[test]
    fn run_chain_is_deterministic_and_counts_samples() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let n = 60;
        let x = Array2::from_shape_fn((n, 2), |_| rng.random_range(0.0..1.0));
        let beta = rand_distr::Beta::new(3.0, 3.0).unwrap();
        let y = Array1::from_shape_fn(n, |_| beta.sample(&mut rng));
        let data = Dataset::new(x, y).unwrap();
        let shape = NetworkShape::new(2, vec![3], 6, Activation::Tanh).unwrap();
        let basis = SplineBasis::new(6).unwrap();
        let prior = PriorConfig::default();
        let c = McmcControl {
            iter: 120,
            warmup: 40,
            thin: 2,
            seed: Some(99),
            ..McmcControl::default()
        };
        let a = run_chain(&data, &shape, &basis, &prior, &c).unwrap();
        let b = run_chain(&data, &shape, &basis, &prior, &c).unwrap();
        assert_eq!(a.weights.len(), 40);
        assert_eq!(a.weights, b.weights);
        match (&a.log, &b.log) {
            (TrainingLog::Sampler(sa), TrainingLog::Sampler(sb)) => {
                assert_eq!(sa.loglik, sb.loglik);
                assert_eq!(sa.accept_stat, sb.accept_stat);
                assert_eq!(sa.loglik.len(), 120);
            }
            _ => unreachable!(),
        }
    }
}
