//! Point estimation by stochastic gradient descent: MLE and MAP via a
//! self-contained Adam optimizer with mini-batching, a held-out validation
//! split, best-model checkpointing and early stopping.
//!
//! MAP optimizes the non-centered parameterization: standardized weights `Z`
//! plus the free scale variances on the log scale, with `W = sigma lambda Z`
//! recovered at the end. Losses are averaged per batch so the learning rate
//! is robust to the batch size; the prior term is weighted `1/n`.

use std::path::PathBuf;
use std::time::Instant;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::basis::SplineBasis;
use crate::error::{Error, Result};
use crate::model::{FittedModel, Method, Normalization, OptimizerLog, TrainingLog};
use crate::network::{Dataset, DropoutMasks, LogLik, NetworkShape, WeightSet};
use crate::priors::{scale_groups, PriorConfig, PriorVariant, ScaleGroup, ScaleState};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Optimizer controls. Defaults: learning rate 0.01, batch size 128,
/// 200 epochs, 20% validation split, early stopping after 10 stale epochs,
/// no dropout.
#[derive(Debug, Clone)]
pub struct TrainControl {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub valid_pct: f64,
    pub early_stopping_epochs: usize,
    /// Dropout probabilities for the input-to-hidden layer and all
    /// hidden-to-hidden layers respectively.
    pub dropout: (f64, f64),
    /// Not implemented; rejected when set.
    pub batch_norm: bool,
    pub print_every: usize,
    pub verbose: bool,
    pub seed: Option<u64>,
    /// When set, the best-validation model is written here at each
    /// improvement, in the model file format.
    pub checkpoint_path: Option<PathBuf>,
}

impl Default for TrainControl {
    fn default() -> Self {
        TrainControl {
            lr: 0.01,
            batch_size: 128,
            epochs: 200,
            valid_pct: 0.2,
            early_stopping_epochs: 10,
            dropout: (0.0, 0.0),
            batch_norm: false,
            print_every: 10,
            verbose: false,
            seed: None,
            checkpoint_path: None,
        }
    }
}

impl TrainControl {
    fn validate(&self) -> Result<()> {
        if self.batch_norm {
            return Err(Error::capability(
                "batch normalization is not implemented; unset batch_norm",
            ));
        }
        if self.batch_size < 1 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if self.epochs < 1 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.valid_pct) {
            return Err(Error::invalid(format!("valid_pct {} outside [0,1)", self.valid_pct)));
        }
        if !(0.0..1.0).contains(&self.dropout.0) || !(0.0..1.0).contains(&self.dropout.1) {
            return Err(Error::invalid("dropout probabilities must lie in [0,1)"));
        }
        if !(self.lr > 0.0) && self.lr != 0.0 {
            return Err(Error::invalid("learning rate must be nonnegative"));
        }
        Ok(())
    }
}

/// First/second-moment accumulators of Adam with the canonical constants
/// beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        AdamState { m: vec![0.0; dim], v: vec![0.0; dim], t: 0 }
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// Textbook Adam update with bias correction; deterministic.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let b1t = 1.0 - ADAM_BETA1.powi(self.t as i32);
        let b2t = 1.0 - ADAM_BETA2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * g;
            self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = self.m[i] / b1t;
            let v_hat = self.v[i] / b2t;
            params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
}

/// One Adam update; returns nothing, mutating `state` and `params` in place.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64], lr: f64) {
    state.step(params, grads, lr);
}

/// Disjoint index sets covering `0..n` with sizes differing by at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub folds: Vec<Vec<usize>>,
}

impl FoldAssignment {
    pub fn nfold(&self) -> usize {
        self.folds.len()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for fold in &self.folds {
            for &i in fold {
                if i >= n {
                    return Err(Error::invalid(format!("fold index {i} out of range for n={n}")));
                }
                if seen[i] {
                    return Err(Error::invalid(format!("index {i} appears in two folds")));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::invalid("folds do not cover every observation"));
        }
        Ok(())
    }
}

/// Seeded uniform shuffle split into `nfold` balanced folds.
pub fn create_folds(n: usize, nfold: usize, seed: u64) -> Result<FoldAssignment> {
    if nfold < 2 || nfold > n {
        return Err(Error::invalid(format!("nfold must satisfy 2 <= nfold <= n, got {nfold} for n={n}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let base = n / nfold;
    let extra = n % nfold;
    let mut folds = Vec::with_capacity(nfold);
    let mut off = 0;
    for f in 0..nfold {
        let size = base + usize::from(f < extra);
        let mut fold: Vec<usize> = idx[off..off + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        off += size;
    }
    Ok(FoldAssignment { folds })
}

/// Derive a per-worker seed from the run seed.
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    seed ^ (stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| rand::rng().random())
}

/// The optimized parameterization: flat weights for MLE, standardized
/// weights plus log-variances for MAP.
enum Objective {
    Mle {
        shape: NetworkShape,
    },
    Map {
        shape: NetworkShape,
        cfg: PriorConfig,
        groups: Vec<ScaleGroup>,
    },
}

impl Objective {
    fn shape(&self) -> &NetworkShape {
        match self {
            Objective::Mle { shape } | Objective::Map { shape, .. } => shape,
        }
    }

    fn dim(&self) -> usize {
        let n_w = self.shape().n_params();
        match self {
            Objective::Mle { .. } => n_w,
            Objective::Map { shape, cfg, groups } => {
                n_w + groups.len() + if cfg.variant == PriorVariant::GSM { shape.n_layers() } else { 0 }
            }
        }
    }

    /// Bounded initialization: zero biases, weights uniform on
    /// +/- sqrt(6/(fan_in + fan_out)); scale logs start at zero.
    fn init(&self, rng: &mut ChaCha20Rng) -> Vec<f64> {
        let shape = self.shape();
        let mut w = WeightSet::zeros(shape);
        for m in w.layers.iter_mut() {
            let (rows, cols) = m.dim();
            let bound = (6.0 / (rows + cols - 1) as f64).sqrt();
            for r in 0..rows {
                for c in 1..cols {
                    m[[r, c]] = rng.random_range(-bound..bound);
                }
            }
        }
        let mut params = w.to_flat();
        params.resize(self.dim(), 0.0);
        params
    }

    /// Split MAP parameters into standardized weights and scale state.
    fn unpack(&self, params: &[f64]) -> Result<(WeightSet, ScaleState)> {
        let shape = self.shape();
        let n_w = shape.n_params();
        let z = WeightSet::from_flat(shape, &params[..n_w])?;
        let mut scales = ScaleState::init(shape);
        if let Objective::Map { cfg, groups, .. } = self {
            for (gi, g) in groups.iter().enumerate() {
                let v = params[n_w + gi].exp();
                for &j in &g.cols {
                    scales.lambda2[g.layer][j] = v;
                }
            }
            if cfg.variant == PriorVariant::GSM {
                for l in 0..shape.n_layers() {
                    scales.sigma2[l] = params[n_w + groups.len() + l].exp();
                }
            }
        }
        Ok((z, scales))
    }

    /// Natural weights for prediction/reporting.
    fn weights(&self, params: &[f64]) -> Result<WeightSet> {
        match self {
            Objective::Mle { shape } => WeightSet::from_flat(shape, params),
            Objective::Map { .. } => {
                let (z, scales) = self.unpack(params)?;
                Ok(crate::priors::reparam_to_weights(&z, &scales))
            }
        }
    }

    /// Mean-per-observation loss over a batch plus the prior weighted by
    /// `1/n_train`, with its gradient in the optimized parameterization.
    fn batch_loss_grad(
        &self,
        params: &[f64],
        batch: &LogLik,
        n_train: usize,
        masks: Option<&DropoutMasks>,
    ) -> Result<(f64, Vec<f64>)> {
        let b = batch.n() as f64;
        match self {
            Objective::Mle { shape } => {
                let w = WeightSet::from_flat(shape, params)?;
                let (ll, g) = batch.value_grad(&w, masks)?;
                let loss = -ll / b;
                let grad: Vec<f64> = g.to_flat().iter().map(|v| -v / b).collect();
                Ok((loss, grad))
            }
            Objective::Map { shape, cfg, groups } => {
                let n_w = shape.n_params();
                let (z, scales) = self.unpack(params)?;
                let w = crate::priors::reparam_to_weights(&z, &scales);
                let (ll, g_w) = batch.value_grad(&w, masks)?;
                let nt = n_train as f64;
                let mut loss = -ll / b;
                let mut grad = vec![0.0; self.dim()];
                // d(-ll/b)/dZ = -g_w/b * sigma*lambda, plus Z/n from the
                // standard normal prior on Z.
                let mut off = 0;
                let mut prior = 0.0;
                for (l, gm) in g_w.layers.iter().enumerate() {
                    let s = scales.sigma2[l].sqrt();
                    for r in 0..gm.nrows() {
                        for c in 0..gm.ncols() {
                            let zf = z.layers[l][[r, c]];
                            let sl = s * scales.lambda2[l][c].sqrt();
                            grad[off] = -gm[[r, c]] / b * sl + zf / nt;
                            prior += 0.5 * zf * zf;
                            off += 1;
                        }
                    }
                }
                // Scale parameters on the log scale: dW/dxi = W/2 for every
                // governed entry; the IG(-log density) adds (a+1) - b/v.
                for (gi, g) in groups.iter().enumerate() {
                    let v = scales.lambda2[g.layer][g.cols[0]];
                    let mut acc = 0.0;
                    for &j in &g.cols {
                        for r in 0..g_w.layers[g.layer].nrows() {
                            acc += -g_w.layers[g.layer][[r, j]] / b * w.layers[g.layer][[r, j]] / 2.0;
                        }
                    }
                    grad[n_w + gi] = acc + ((g.a + 1.0) - g.b / v) / nt;
                    prior += (g.a + 1.0) * v.ln() + g.b / v;
                }
                if cfg.variant == PriorVariant::GSM {
                    for l in 0..shape.n_layers() {
                        let s2 = scales.sigma2[l];
                        let mut acc = 0.0;
                        for (ge, we) in g_w.layers[l].iter().zip(w.layers[l].iter()) {
                            acc += -ge / b * we / 2.0;
                        }
                        grad[n_w + groups.len() + l] =
                            acc + ((cfg.a_sigma + 1.0) - cfg.b_sigma / s2) / nt;
                        prior += (cfg.a_sigma + 1.0) * s2.ln() + cfg.b_sigma / s2;
                    }
                }
                loss += prior / nt;
                Ok((loss, grad))
            }
        }
    }

    /// Per-observation mean negative log-likelihood (data term only).
    fn data_loss(&self, params: &[f64], subset: &LogLik) -> Result<f64> {
        let w = self.weights(params)?;
        Ok(-subset.value(&w)? / subset.n() as f64)
    }
}

fn draw_masks(
    shape: &NetworkShape,
    n: usize,
    dropout: (f64, f64),
    rng: &mut ChaCha20Rng,
) -> Option<DropoutMasks> {
    if dropout.0 == 0.0 && dropout.1 == 0.0 {
        return None;
    }
    let draw = |p: f64, rows: usize, cols: usize, rng: &mut ChaCha20Rng| -> Option<Array2<f64>> {
        if p == 0.0 {
            return None;
        }
        let keep = 1.0 / (1.0 - p);
        Some(Array2::from_shape_fn((rows, cols), |_| {
            if rng.random_range(0.0..1.0) < p {
                0.0
            } else {
                keep
            }
        }))
    };
    let input = draw(dropout.0, n, shape.input, rng);
    let hidden = shape
        .hidden
        .iter()
        .map(|&v| draw(dropout.1, n, v, rng))
        .collect();
    Some(DropoutMasks { input, hidden })
}

struct FitOutcome {
    weights: WeightSet,
    log: OptimizerLog,
    seed: u64,
}

fn run_fit(
    data: &Dataset,
    basis: &SplineBasis,
    objective: &Objective,
    control: &TrainControl,
    method: Method,
    prior: Option<PriorConfig>,
) -> Result<FitOutcome> {
    control.validate()?;
    let start = Instant::now();
    let seed = resolve_seed(control.seed);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let shape = objective.shape().clone();
    let full = LogLik::new(&shape, basis, data)?;
    let n = full.n();

    // One-time validation split from the run seed.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let n_valid = ((n as f64) * control.valid_pct).floor() as usize;
    let (valid_idx, train_idx) = idx.split_at(n_valid);
    if train_idx.is_empty() {
        return Err(Error::invalid("training split is empty; lower valid_pct"));
    }
    let train = full.select(train_idx);
    let valid = if valid_idx.is_empty() { None } else { Some(full.select(valid_idx)) };
    let n_train = train.n();

    let mut params = objective.init(&mut rng);
    let mut adam = AdamState::new(params.len());

    let mut train_hist = Vec::new();
    let mut valid_hist = Vec::new();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut best_params = params.clone();
    let mut stale = 0usize;

    let mut order: Vec<usize> = (0..n_train).collect();
    for epoch in 0..control.epochs {
        order.shuffle(&mut rng);
        for (bi, chunk) in order.chunks(control.batch_size).enumerate() {
            let batch = train.select(chunk);
            let masks = draw_masks(&shape, batch.n(), control.dropout, &mut rng);
            let (loss, grad) = objective
                .batch_loss_grad(&params, &batch, n_train, masks.as_ref())
                .map_err(|e| annotate_batch(e, epoch, bi))?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::numerical(format!(
                    "non-finite loss or gradient in epoch {epoch}, batch {bi}"
                )));
            }
            adam.step(&mut params, &grad, control.lr);
        }
        let train_loss = objective.data_loss(&params, &train)?;
        let valid_loss = match &valid {
            Some(v) => objective.data_loss(&params, v)?,
            None => train_loss,
        };
        train_hist.push(train_loss);
        valid_hist.push(valid_loss);
        if control.verbose && (epoch + 1) % control.print_every.max(1) == 0 {
            eprintln!("epoch {:>4}: train {train_loss:.6}, validation {valid_loss:.6}", epoch + 1);
        }
        if valid_loss < best_loss {
            best_loss = valid_loss;
            best_epoch = epoch;
            best_params.copy_from_slice(&params);
            stale = 0;
            if let Some(path) = &control.checkpoint_path {
                let snapshot = assemble(
                    &shape,
                    basis,
                    method,
                    prior,
                    objective.weights(&best_params)?,
                    OptimizerLog {
                        train_loss: train_hist.clone(),
                        valid_loss: valid_hist.clone(),
                        best_epoch,
                        best_valid_loss: best_loss,
                        lr: control.lr,
                        batch_size: control.batch_size,
                        elapsed_secs: start.elapsed().as_secs_f64(),
                    },
                    seed,
                );
                crate::persist::save(&snapshot, path)?;
            }
        } else {
            stale += 1;
            if stale >= control.early_stopping_epochs {
                break;
            }
        }
    }

    Ok(FitOutcome {
        weights: objective.weights(&best_params)?,
        log: OptimizerLog {
            train_loss: train_hist,
            valid_loss: valid_hist,
            best_epoch,
            best_valid_loss: best_loss,
            lr: control.lr,
            batch_size: control.batch_size,
            elapsed_secs: start.elapsed().as_secs_f64(),
        },
        seed,
    })
}

fn annotate_batch(e: Error, epoch: usize, batch: usize) -> Error {
    match e {
        Error::ZeroDensity { obs } => Error::numerical(format!(
            "zero mixture density (epoch {epoch}, batch {batch}, batch row {obs})"
        )),
        other => other,
    }
}

fn assemble(
    shape: &NetworkShape,
    basis: &SplineBasis,
    method: Method,
    prior: Option<PriorConfig>,
    weights: WeightSet,
    log: OptimizerLog,
    seed: u64,
) -> FittedModel {
    FittedModel {
        shape: shape.clone(),
        basis: basis.clone(),
        method,
        weights: vec![weights],
        normalization: Normalization::identity(shape.input),
        prior,
        log: TrainingLog::Optimizer(log),
        seed,
    }
}

/// Maximum likelihood fit: minimizes the mean negative log-likelihood over
/// mini-batches, holds out `valid_pct` of rows for validation, checkpoints
/// the best-validation model and stops after `early_stopping_epochs` without
/// improvement.
pub fn fit_mle(
    data: &Dataset,
    shape: &NetworkShape,
    basis: &SplineBasis,
    control: &TrainControl,
) -> Result<FittedModel> {
    let objective = Objective::Mle { shape: shape.clone() };
    let out = run_fit(data, basis, &objective, control, Method::Mle, None)?;
    Ok(assemble(shape, basis, Method::Mle, None, out.weights, out.log, out.seed))
}

/// Maximum a posteriori fit in the non-centered parameterization, jointly
/// over standardized weights and log-scale variances; otherwise identical
/// mechanics to [`fit_mle`].
pub fn fit_map(
    data: &Dataset,
    shape: &NetworkShape,
    basis: &SplineBasis,
    prior: &PriorConfig,
    control: &TrainControl,
) -> Result<FittedModel> {
    prior.validate()?;
    let objective = Objective::Map {
        shape: shape.clone(),
        cfg: *prior,
        groups: scale_groups(shape, prior),
    };
    let out = run_fit(data, basis, &objective, control, Method::Map, Some(*prior))?;
    Ok(assemble(shape, basis, Method::Map, Some(*prior), out.weights, out.log, out.seed))
}

/// Per-fold and averaged cross-validation error.
#[derive(Debug, Clone)]
pub struct CvResult {
    pub per_fold: Vec<f64>,
    pub cve: f64,
}

/// K-fold cross-validation error: for each fold, train on the complement
/// and score the mean negative log-likelihood on the held-out fold; lower
/// is better.
pub fn cv_error(
    data: &Dataset,
    shape: &NetworkShape,
    basis: &SplineBasis,
    method: Method,
    prior: Option<&PriorConfig>,
    control: &TrainControl,
    folds: &FoldAssignment,
) -> Result<CvResult> {
    folds.validate(data.n())?;
    if method == Method::Mcmc {
        return Err(Error::capability(
            "cross-validation is only applicable to MLE and MAP estimators",
        ));
    }
    let base_seed = resolve_seed(control.seed);
    let full = LogLik::new(shape, basis, data)?;
    let mut per_fold = Vec::with_capacity(folds.nfold());
    for (fi, fold) in folds.folds.iter().enumerate() {
        let in_fold: Vec<bool> = {
            let mut mask = vec![false; data.n()];
            for &i in fold {
                mask[i] = true;
            }
            mask
        };
        let train_idx: Vec<usize> = (0..data.n()).filter(|&i| !in_fold[i]).collect();
        let train = Dataset::new(
            data.x.select(ndarray::Axis(0), &train_idx),
            data.y.select(ndarray::Axis(0), &train_idx),
        )?;
        let mut fold_control = control.clone();
        fold_control.seed = Some(derive_seed(base_seed, fi as u64));
        fold_control.checkpoint_path = None;
        let fitted = match method {
            Method::Mle => fit_mle(&train, shape, basis, &fold_control),
            Method::Map => {
                let p = prior.copied().unwrap_or_default();
                fit_map(&train, shape, basis, &p, &fold_control)
            }
            Method::Mcmc => unreachable!(),
        }
        .map_err(|e| Error::numerical(format!("fold {fi}: {e}")))?;
        let held = full.select(fold);
        let nll = -held.value(&fitted.weights[0])? / held.n() as f64;
        per_fold.push(nll);
    }
    let cve = per_fold.iter().sum::<f64>() / per_fold.len() as f64;
    Ok(CvResult { per_fold, cve })
}
