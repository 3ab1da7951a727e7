//! Post-fit interpretation and diagnostics: quantile accumulated local
//! effects (main and interaction), ALE-induced variable importance, PIT
//! goodness-of-fit, and WAIC / importance-sampling LOO.
//!
//! The ALE estimators follow the classic binning procedure: covariate bins
//! at empirical quantile breakpoints, per-bin averaged finite differences
//! with the other covariates held at observed values, accumulation across
//! bins, and count-weighted centering. Any prediction function with the
//! `(matrix, taus) -> matrix` signature can be plugged in, which allows
//! comparisons against external or closed-form oracles.

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::model::{quantile_type7, FittedModel};

/// Quantile prediction function: rows of covariates by quantile levels.
pub type QuantilePredictFn<'a> = dyn Fn(&Array2<f64>, &[f64]) -> Result<Array2<f64>> + 'a;

/// Covariates with at most this many unique values are treated as discrete
/// (variable importance uses the range instead of the standard deviation).
pub const DISCRETE_UNIQUE_LIMIT: usize = 10;

pub const DEFAULT_ALE_BINS: usize = 40;

#[derive(Debug, Clone)]
pub enum AleEffects {
    /// Main effect values at the bin edges: `(edges, taus)`.
    Main { ale: Array2<f64>, counts: Vec<usize> },
    /// Interaction surface on the edge grid: `(edges_j, edges_l, taus)`.
    Interaction { ale: Array3<f64>, counts: Array2<usize> },
}

/// Accumulated local effects for one covariate (or a pair), per quantile
/// level, with optional posterior uncertainty companions.
#[derive(Debug, Clone)]
pub struct AleResult {
    pub var_index: Vec<usize>,
    pub bin_edges: Vec<Vec<f64>>,
    pub tau: Vec<f64>,
    pub effects: AleEffects,
    pub lower: Option<Array2<f64>>,
    pub upper: Option<Array2<f64>>,
    pub samples: Option<Vec<Array2<f64>>>,
}

impl AleResult {
    /// Main-effect curve for one tau (values at the bin edges).
    pub fn main_curve(&self, tau_idx: usize) -> Result<Vec<f64>> {
        match &self.effects {
            AleEffects::Main { ale, .. } => Ok(ale.column(tau_idx).to_vec()),
            _ => Err(Error::invalid("not a main-effect result")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViKind {
    Sd,
    Range,
}

/// Per-covariate, per-tau variable importance.
#[derive(Debug, Clone)]
pub struct ImportanceResult {
    pub var_index: Vec<usize>,
    pub tau: Vec<f64>,
    pub vi: Array2<f64>,
    pub kind: Vec<ViKind>,
    pub lower: Option<Array2<f64>>,
    pub upper: Option<Array2<f64>>,
}

/// Empirical-quantile breakpoints (type 1, duplicates collapsed).
fn bin_breaks(col: &[f64], n_bins: usize) -> Result<Vec<f64>> {
    let n = col.len();
    let mut sorted = col.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut edges = Vec::with_capacity(n_bins + 1);
    edges.push(sorted[0]);
    for k in 1..=n_bins {
        let p = k as f64 / n_bins as f64;
        let idx = ((p * n as f64).ceil() as usize).clamp(1, n);
        edges.push(sorted[idx - 1]);
    }
    edges.dedup();
    if edges.len() < 2 {
        return Err(Error::invalid(
            "covariate has a single unique value; local effects are undefined",
        ));
    }
    Ok(edges)
}

/// Bin index of `v`: bin `k` covers `(z_k, z_{k+1}]`, the first bin also
/// includes its lower edge.
fn bin_of(v: f64, edges: &[f64]) -> usize {
    let k = edges[1..edges.len() - 1].partition_point(|&e| e < v);
    k.min(edges.len() - 2)
}

fn unique_count(col: &[f64]) -> usize {
    let mut sorted = col.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();
    sorted.len()
}

/// Main-effect quantile ALE of covariate `j` under an arbitrary prediction
/// function. Bins `x[,j]` at empirical quantile breakpoints (at most
/// `n_bins` intervals; fewer when unique values are scarce), averages the
/// prediction difference between each bin's edges with the remaining
/// covariates at observed values, accumulates, and centers by the
/// count-weighted mean.
pub fn qale_main(
    predict: &QuantilePredictFn,
    x: &Array2<f64>,
    j: usize,
    taus: &[f64],
    n_bins: usize,
) -> Result<AleResult> {
    if j >= x.ncols() {
        return Err(Error::invalid(format!("covariate index {j} out of range")));
    }
    if n_bins < 1 {
        return Err(Error::invalid("n_bins must be at least 1"));
    }
    if taus.is_empty() {
        return Err(Error::invalid("at least one quantile level is required"));
    }
    let n = x.nrows();
    let col = x.column(j).to_vec();
    let edges = bin_breaks(&col, n_bins)?;
    let n_edges = edges.len();
    let k_bins = n_edges - 1;
    let bins: Vec<usize> = col.iter().map(|&v| bin_of(v, &edges)).collect();
    let mut counts = vec![0usize; k_bins];
    for &b in &bins {
        counts[b] += 1;
    }

    // Predictions at each row's bin edges, two calls total.
    let mut x_lo = x.clone();
    let mut x_hi = x.clone();
    for i in 0..n {
        x_lo[[i, j]] = edges[bins[i]];
        x_hi[[i, j]] = edges[bins[i] + 1];
    }
    let f_lo = predict(&x_lo, taus)?;
    let f_hi = predict(&x_hi, taus)?;
    if f_lo.dim() != (n, taus.len()) || f_hi.dim() != (n, taus.len()) {
        return Err(Error::invalid(
            "prediction function must return a rows-by-taus matrix",
        ));
    }

    let mut delta = Array2::<f64>::zeros((k_bins, taus.len()));
    for i in 0..n {
        for t in 0..taus.len() {
            delta[[bins[i], t]] += f_hi[[i, t]] - f_lo[[i, t]];
        }
    }
    for b in 0..k_bins {
        if counts[b] > 0 {
            let c = counts[b] as f64;
            delta.row_mut(b).mapv_inplace(|v| v / c);
        }
    }

    let mut ale = Array2::<f64>::zeros((n_edges, taus.len()));
    for t in 0..taus.len() {
        let mut acc = 0.0;
        for b in 0..k_bins {
            acc += delta[[b, t]];
            ale[[b + 1, t]] = acc;
        }
        let mut center = 0.0;
        for b in 0..k_bins {
            center += counts[b] as f64 * 0.5 * (ale[[b, t]] + ale[[b + 1, t]]);
        }
        center /= n as f64;
        for e in 0..n_edges {
            ale[[e, t]] -= center;
        }
    }

    Ok(AleResult {
        var_index: vec![j],
        bin_edges: vec![edges],
        tau: taus.to_vec(),
        effects: AleEffects::Main { ale, counts },
        lower: None,
        upper: None,
        samples: None,
    })
}

/// Second-order quantile ALE for a covariate pair: 2-D second-difference
/// accumulation over the bin grid, centered so the count-weighted marginal
/// means vanish (removing main effects) and the overall weighted mean is 0.
pub fn qale_interaction(
    predict: &QuantilePredictFn,
    x: &Array2<f64>,
    j: usize,
    l: usize,
    taus: &[f64],
    n_bins: usize,
) -> Result<AleResult> {
    if j == l {
        return Err(Error::invalid("interaction requires two distinct covariates"));
    }
    if j >= x.ncols() || l >= x.ncols() {
        return Err(Error::invalid("covariate index out of range"));
    }
    if taus.is_empty() {
        return Err(Error::invalid("at least one quantile level is required"));
    }
    let n = x.nrows();
    let col_j = x.column(j).to_vec();
    let col_l = x.column(l).to_vec();
    let edges_j = bin_breaks(&col_j, n_bins)?;
    let edges_l = bin_breaks(&col_l, n_bins)?;
    let (k1, k2) = (edges_j.len() - 1, edges_l.len() - 1);
    let bj: Vec<usize> = col_j.iter().map(|&v| bin_of(v, &edges_j)).collect();
    let bl: Vec<usize> = col_l.iter().map(|&v| bin_of(v, &edges_l)).collect();
    let mut counts = Array2::<usize>::zeros((k1, k2));
    for i in 0..n {
        counts[[bj[i], bl[i]]] += 1;
    }

    // Four corner predictions per row.
    let corner = |hi_j: bool, hi_l: bool| -> (Array2<f64>, ()) {
        let mut m = x.clone();
        for i in 0..n {
            m[[i, j]] = edges_j[bj[i] + usize::from(hi_j)];
            m[[i, l]] = edges_l[bl[i] + usize::from(hi_l)];
        }
        (m, ())
    };
    let f_ll = predict(&corner(false, false).0, taus)?;
    let f_lh = predict(&corner(false, true).0, taus)?;
    let f_hl = predict(&corner(true, false).0, taus)?;
    let f_hh = predict(&corner(true, true).0, taus)?;

    let n_taus = taus.len();
    let mut ale = Array3::<f64>::zeros((k1 + 1, k2 + 1, n_taus));
    for t in 0..n_taus {
        // Cell-averaged second differences; empty cells contribute zero.
        let mut delta = Array2::<f64>::zeros((k1, k2));
        for i in 0..n {
            delta[[bj[i], bl[i]]] +=
                f_hh[[i, t]] - f_hl[[i, t]] - f_lh[[i, t]] + f_ll[[i, t]];
        }
        for a in 0..k1 {
            for b in 0..k2 {
                if counts[[a, b]] > 0 {
                    delta[[a, b]] /= counts[[a, b]] as f64;
                }
            }
        }
        // Cumulative accumulation onto the edge grid.
        let mut fj = Array2::<f64>::zeros((k1 + 1, k2 + 1));
        for a in 1..=k1 {
            for b in 1..=k2 {
                fj[[a, b]] = delta[[a - 1, b - 1]] + fj[[a - 1, b]] + fj[[a, b - 1]]
                    - fj[[a - 1, b - 1]];
            }
        }
        // Count-weighted marginal means, subtracted cumulatively.
        let mut fj1 = vec![0.0; k1 + 1];
        for a in 0..k1 {
            let mut num = 0.0;
            let mut den = 0.0;
            for b in 0..k2 {
                let c = counts[[a, b]] as f64;
                let row_delta_lo = fj[[a + 1, b]] - fj[[a, b]];
                let row_delta_hi = fj[[a + 1, b + 1]] - fj[[a, b + 1]];
                num += c * 0.5 * (row_delta_lo + row_delta_hi);
                den += c;
            }
            fj1[a + 1] = fj1[a] + if den > 0.0 { num / den } else { 0.0 };
        }
        let mut fj2 = vec![0.0; k2 + 1];
        for b in 0..k2 {
            let mut num = 0.0;
            let mut den = 0.0;
            for a in 0..k1 {
                let c = counts[[a, b]] as f64;
                let col_delta_lo = fj[[a, b + 1]] - fj[[a, b]];
                let col_delta_hi = fj[[a + 1, b + 1]] - fj[[a + 1, b]];
                num += c * 0.5 * (col_delta_lo + col_delta_hi);
                den += c;
            }
            fj2[b + 1] = fj2[b] + if den > 0.0 { num / den } else { 0.0 };
        }
        for a in 0..=k1 {
            for b in 0..=k2 {
                fj[[a, b]] -= fj1[a] + fj2[b];
            }
        }
        // Grand mean over cells.
        let mut grand = 0.0;
        for a in 0..k1 {
            for b in 0..k2 {
                grand += counts[[a, b]] as f64
                    * 0.25
                    * (fj[[a, b]] + fj[[a + 1, b]] + fj[[a, b + 1]] + fj[[a + 1, b + 1]]);
            }
        }
        grand /= n as f64;
        for a in 0..=k1 {
            for b in 0..=k2 {
                ale[[a, b, t]] = fj[[a, b]] - grand;
            }
        }
    }

    Ok(AleResult {
        var_index: vec![j, l],
        bin_edges: vec![edges_j, edges_l],
        tau: taus.to_vec(),
        effects: AleEffects::Interaction { ale, counts },
        lower: None,
        upper: None,
        samples: None,
    })
}

/// Quantile ALE of a fitted model. A single index computes main effects;
/// a pair computes the interaction surface. `ci_level`/`get_all` request
/// posterior uncertainty and are implemented only for main effects of MCMC
/// models: the ALE is recomputed per posterior sample and summarized
/// pointwise.
pub fn qale(
    model: &FittedModel,
    x: &Array2<f64>,
    var_index: &[usize],
    taus: &[f64],
    n_bins: usize,
    ci_level: Option<f64>,
    get_all: bool,
) -> Result<AleResult> {
    let predict = |m: &Array2<f64>, t: &[f64]| model.quantile_matrix(m, t);
    match var_index {
        [j] => {
            if ci_level.is_none() && !get_all {
                return qale_main(&predict, x, *j, taus, n_bins);
            }
            model.require_mcmc(if ci_level.is_some() { "ci_level" } else { "get_all" })?;
            if let Some(ci) = ci_level {
                if !(ci > 0.0 && ci < 1.0) {
                    return Err(Error::invalid(format!("ci_level {ci} outside (0,1)")));
                }
            }
            let s_count = model.n_samples();
            let mut per_sample = Vec::with_capacity(s_count);
            for s in 0..s_count {
                let pred_s = |m: &Array2<f64>, t: &[f64]| model.quantile_matrix_sample(m, t, s);
                let r = qale_main(&pred_s, x, *j, taus, n_bins)?;
                match r.effects {
                    AleEffects::Main { ale, .. } => per_sample.push(ale),
                    _ => unreachable!(),
                }
            }
            // Bins depend only on x, so per-sample curves share the layout;
            // ALE is linear in the prediction, so the mean of per-sample
            // curves is the curve of the mean prediction.
            let mut base = qale_main(&predict, x, *j, taus, n_bins)?;
            if let Some(ci) = ci_level {
                let (pl, pu) = ((1.0 - ci) / 2.0, (1.0 + ci) / 2.0);
                let (n_edges, n_taus) = per_sample[0].dim();
                let mut lo = Array2::zeros((n_edges, n_taus));
                let mut up = Array2::zeros((n_edges, n_taus));
                let mut vals = vec![0.0; s_count];
                for e in 0..n_edges {
                    for t in 0..n_taus {
                        for (s, m) in per_sample.iter().enumerate() {
                            vals[s] = m[[e, t]];
                        }
                        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                        lo[[e, t]] = quantile_type7(&vals, pl);
                        up[[e, t]] = quantile_type7(&vals, pu);
                    }
                }
                base.lower = Some(lo);
                base.upper = Some(up);
            }
            if get_all {
                base.samples = Some(per_sample);
            }
            Ok(base)
        }
        [j, l] => {
            if ci_level.is_some() || get_all {
                return Err(Error::capability(
                    "uncertainty for local effects is implemented only for main effects",
                ));
            }
            qale_interaction(&predict, x, *j, *l, taus, n_bins)
        }
        _ => Err(Error::invalid("var_index must contain one or two covariate indices")),
    }
}

/// Count-weighted variable importance values from a main-effect ALE.
fn vi_from_main(ale: &Array2<f64>, counts: &[usize], kind: ViKind) -> Vec<f64> {
    let (n_edges, n_taus) = ale.dim();
    let n: f64 = counts.iter().sum::<usize>() as f64;
    (0..n_taus)
        .map(|t| match kind {
            ViKind::Sd => {
                // Per-observation value: the midpoint of its bin's edges.
                let mut mean = 0.0;
                for b in 0..counts.len() {
                    mean += counts[b] as f64 * 0.5 * (ale[[b, t]] + ale[[b + 1, t]]);
                }
                mean /= n;
                let mut var = 0.0;
                for b in 0..counts.len() {
                    let v = 0.5 * (ale[[b, t]] + ale[[b + 1, t]]) - mean;
                    var += counts[b] as f64 * v * v;
                }
                (var / n).sqrt()
            }
            ViKind::Range => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for e in 0..n_edges {
                    lo = lo.min(ale[[e, t]]);
                    hi = hi.max(ale[[e, t]]);
                }
                hi - lo
            }
        })
        .collect()
}

/// ALE-induced variable importance under an arbitrary prediction function:
/// the count-weighted standard deviation of the main-effect ALE for
/// continuous covariates, the range for discrete ones.
pub fn qvi_with_predict(
    predict: &QuantilePredictFn,
    x: &Array2<f64>,
    indices: &[usize],
    taus: &[f64],
    n_bins: usize,
) -> Result<ImportanceResult> {
    let mut vi = Array2::zeros((indices.len(), taus.len()));
    let mut kinds = Vec::with_capacity(indices.len());
    for (vi_row, &j) in indices.iter().enumerate() {
        let kind = if unique_count(&x.column(j).to_vec()) <= DISCRETE_UNIQUE_LIMIT {
            ViKind::Range
        } else {
            ViKind::Sd
        };
        kinds.push(kind);
        let r = qale_main(predict, x, j, taus, n_bins)?;
        let (ale, counts) = match &r.effects {
            AleEffects::Main { ale, counts } => (ale, counts),
            _ => unreachable!(),
        };
        for (t, v) in vi_from_main(ale, counts, kind).into_iter().enumerate() {
            vi[[vi_row, t]] = v;
        }
    }
    Ok(ImportanceResult {
        var_index: indices.to_vec(),
        tau: taus.to_vec(),
        vi,
        kind: kinds,
        lower: None,
        upper: None,
    })
}

/// Variable importance of a fitted model; defaults to all covariates.
/// With `ci_level` on an MCMC model, the VI is computed per posterior
/// sample and summarized by the mean and pointwise quantile error bars.
pub fn qvi(
    model: &FittedModel,
    x: &Array2<f64>,
    indices: Option<&[usize]>,
    taus: &[f64],
    n_bins: usize,
    ci_level: Option<f64>,
) -> Result<ImportanceResult> {
    let all: Vec<usize> = (0..x.ncols()).collect();
    let indices = indices.unwrap_or(&all);
    let predict = |m: &Array2<f64>, t: &[f64]| model.quantile_matrix(m, t);
    let Some(ci) = ci_level else {
        return qvi_with_predict(&predict, x, indices, taus, n_bins);
    };
    model.require_mcmc("ci_level")?;
    if !(ci > 0.0 && ci < 1.0) {
        return Err(Error::invalid(format!("ci_level {ci} outside (0,1)")));
    }
    let s_count = model.n_samples();
    let mut per_sample: Vec<Array2<f64>> = Vec::with_capacity(s_count);
    let mut kinds = Vec::new();
    for s in 0..s_count {
        let pred_s = |m: &Array2<f64>, t: &[f64]| model.quantile_matrix_sample(m, t, s);
        let r = qvi_with_predict(&pred_s, x, indices, taus, n_bins)?;
        if s == 0 {
            kinds = r.kind.clone();
        }
        per_sample.push(r.vi);
    }
    let mut mean = Array2::zeros((indices.len(), taus.len()));
    for m in &per_sample {
        mean += m;
    }
    mean /= s_count as f64;
    let (pl, pu) = ((1.0 - ci) / 2.0, (1.0 + ci) / 2.0);
    let mut lo = Array2::zeros((indices.len(), taus.len()));
    let mut up = Array2::zeros((indices.len(), taus.len()));
    let mut vals = vec![0.0; s_count];
    for i in 0..indices.len() {
        for t in 0..taus.len() {
            for (s, m) in per_sample.iter().enumerate() {
                vals[s] = m[[i, t]];
            }
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            lo[[i, t]] = quantile_type7(&vals, pl);
            up[[i, t]] = quantile_type7(&vals, pu);
        }
    }
    Ok(ImportanceResult {
        var_index: indices.to_vec(),
        tau: taus.to_vec(),
        vi: mean,
        kind: kinds,
        lower: Some(lo),
        upper: Some(up),
    })
}

/// Probability integral transform values and the Q-Q pairs against uniform
/// plotting positions `(i - 0.5)/n`.
#[derive(Debug, Clone)]
pub struct PitResult {
    pub u: Vec<f64>,
    pub positions: Vec<f64>,
    pub sorted_u: Vec<f64>,
    /// Per-posterior-sample sorted series when requested.
    pub sample_sorted: Option<Vec<Vec<f64>>>,
}

/// PIT against an arbitrary conditional CDF.
pub fn pit_with_cdf<F>(cdf: F, x: &Array2<f64>, y: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64], f64) -> Result<f64>,
{
    let mut u = Vec::with_capacity(y.len());
    for (row, &yi) in x.rows().into_iter().zip(y) {
        u.push(cdf(row.as_slice().expect("contiguous"), yi)?);
    }
    Ok(u)
}

/// PIT of a fitted model on external-scale observations. With `get_all` on
/// an MCMC model, one sorted series per posterior sample is also returned.
pub fn pit(model: &FittedModel, x: &Array2<f64>, y: &[f64], get_all: bool) -> Result<PitResult> {
    if x.ncols() != model.shape.input {
        return Err(Error::invalid("data does not match the model's covariate count"));
    }
    if x.nrows() != y.len() {
        return Err(Error::invalid("covariate and response lengths differ"));
    }
    let u = pit_with_cdf(|row, yv| model.cdf_external(row, yv), x, y)?;
    let n = u.len();
    let positions: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let mut sorted_u = u.clone();
    sorted_u.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sample_sorted = if get_all {
        model.require_mcmc("get_all")?;
        let mut all = Vec::with_capacity(model.n_samples());
        for s in 0..model.n_samples() {
            let single = FittedModel {
                weights: vec![model.weights[s].clone()],
                ..model.clone()
            };
            let mut us = pit_with_cdf(|row, yv| single.cdf_external(row, yv), x, y)?;
            us.sort_by(|a, b| a.partial_cmp(b).unwrap());
            all.push(us);
        }
        Some(all)
    } else {
        None
    };
    Ok(PitResult { u, positions, sorted_u, sample_sorted })
}

/// Kolmogorov-Smirnov distance of a sample from the uniform distribution.
pub fn ks_uniform_distance(u: &[f64]) -> f64 {
    let n = u.len();
    let mut sorted = u.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut d: f64 = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        let hi = (i + 1) as f64 / n as f64 - v;
        let lo = v - i as f64 / n as f64;
        d = d.max(hi.max(lo));
    }
    d
}

/// Expected log pointwise predictive density estimate with its effective
/// penalty, totals and per-observation vectors.
#[derive(Debug, Clone)]
pub struct ElpdResult {
    pub elpd: f64,
    pub penalty: f64,
    pub lpd: f64,
    pub per_obs: Vec<f64>,
}

fn log_mean_exp(vals: &[f64]) -> f64 {
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = vals.iter().map(|v| (v - max).exp()).sum();
    max + (s / vals.len() as f64).ln()
}

fn check_loglik(loglik: &Array2<f64>) -> Result<()> {
    if loglik.nrows() < 2 {
        return Err(Error::invalid(format!(
            "information criteria need at least 2 posterior samples, got {}",
            loglik.nrows()
        )));
    }
    Ok(())
}

/// Widely applicable information criterion from an `S x n` matrix of
/// per-sample per-observation log densities:
/// `elpd_i = log mean_s exp(l_si) - var_s(l_si)`.
pub fn waic(loglik: &Array2<f64>) -> Result<ElpdResult> {
    check_loglik(loglik)?;
    let s = loglik.nrows();
    let mut per_obs = Vec::with_capacity(loglik.ncols());
    let mut lpd_total = 0.0;
    let mut penalty_total = 0.0;
    for col in loglik.columns() {
        let vals: Vec<f64> = col.to_vec();
        let lpd = log_mean_exp(&vals);
        let mean = vals.iter().sum::<f64>() / s as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (s - 1) as f64;
        lpd_total += lpd;
        penalty_total += var;
        per_obs.push(lpd - var);
    }
    Ok(ElpdResult {
        elpd: lpd_total - penalty_total,
        penalty: penalty_total,
        lpd: lpd_total,
        per_obs,
    })
}

/// Plain importance-sampling leave-one-out estimate:
/// `elpd_i = -log mean_s exp(-l_si)`. Less robust than smoothed variants
/// when single samples dominate, but stabilized against overflow.
pub fn loo_is(loglik: &Array2<f64>) -> Result<ElpdResult> {
    check_loglik(loglik)?;
    let mut per_obs = Vec::with_capacity(loglik.ncols());
    let mut total = 0.0;
    let mut lpd_total = 0.0;
    for col in loglik.columns() {
        let vals: Vec<f64> = col.to_vec();
        let neg: Vec<f64> = vals.iter().map(|v| -v).collect();
        let e = -log_mean_exp(&neg);
        lpd_total += log_mean_exp(&vals);
        total += e;
        per_obs.push(e);
    }
    Ok(ElpdResult { elpd: total, penalty: lpd_total - total, lpd: lpd_total, per_obs })
}

/// `S x n` matrix of per-sample per-observation log densities of a fitted
/// model on external-scale observations (the density Jacobian of the
/// normalization is included so entries are comparable across models).
pub fn pointwise_loglik(model: &FittedModel, x: &Array2<f64>, y: &[f64]) -> Result<Array2<f64>> {
    let s_count = model.n_samples();
    let n = y.len();
    let mut out = Array2::zeros((s_count, n));
    let width = model.normalization.y_width();
    let mut buf = vec![0.0; model.basis.size()];
    for i in 0..n {
        let row = x.row(i);
        let (xi, _) = model
            .normalization
            .x_to_internal(row.as_slice().expect("contiguous"));
        let (yi, _) = model.normalization.y_to_internal(y[i]);
        for s in 0..s_count {
            let theta = crate::network::forward(&model.shape, &model.weights[s], &xi)?;
            let dens = crate::model::pdf_from_theta(&model.basis, &theta, yi, &mut buf) / width;
            out[[s, i]] = dens.ln();
        }
    }
    Ok(out)
}
