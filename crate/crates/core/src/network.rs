//! Fully connected network mapping covariates to mixture probabilities,
//! with exact log-likelihood and hand-derived reverse-mode gradients.
//!
//! Layer `l` is stored as a `V_l x (V_{l-1}+1)` matrix whose column 0 is the
//! bias, so hierarchical priors can address the bias as unit index 0. All
//! arithmetic is in f64; MCMC energy conservation is sensitive to gradient
//! precision.

use ndarray::{Array1, Array2, Axis, s};
use serde::{Deserialize, Serialize};

use crate::basis::SplineBasis;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl std::str::FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::invalid(format!(
                "unknown activation '{other}' (expected tanh or relu)"
            ))),
        }
    }
}

/// Architecture of the network: input width, hidden widths, output width.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkShape {
    /// Number of covariates `p`.
    pub input: usize,
    /// Hidden layer widths `V_1..V_{L-1}`, each at least 1.
    pub hidden: Vec<usize>,
    /// Output width `K`; must match the spline basis size.
    pub output: usize,
    pub activation: Activation,
}

impl NetworkShape {
    pub fn new(input: usize, hidden: Vec<usize>, output: usize, activation: Activation) -> Result<Self> {
        if input == 0 || output == 0 || hidden.iter().any(|&v| v == 0) {
            return Err(Error::invalid("all layer widths must be positive"));
        }
        Ok(NetworkShape { input, hidden, output, activation })
    }

    /// Number of weight layers `L` (hidden layers plus the output layer).
    pub fn n_layers(&self) -> usize {
        self.hidden.len() + 1
    }

    /// Per-layer matrix dimensions `(rows, cols) = (V_l, V_{l-1}+1)`.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut widths = Vec::with_capacity(self.n_layers() + 1);
        widths.push(self.input);
        widths.extend_from_slice(&self.hidden);
        widths.push(self.output);
        widths.windows(2).map(|w| (w[1], w[0] + 1)).collect()
    }

    /// Total number of weight entries including biases.
    pub fn n_params(&self) -> usize {
        self.layer_dims().iter().map(|(r, c)| r * c).sum()
    }
}

/// Per-layer weight matrices; column 0 of each matrix is the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    pub layers: Vec<Array2<f64>>,
}

impl WeightSet {
    pub fn zeros(shape: &NetworkShape) -> Self {
        WeightSet {
            layers: shape
                .layer_dims()
                .into_iter()
                .map(|(r, c)| Array2::zeros((r, c)))
                .collect(),
        }
    }

    pub fn validate(&self, shape: &NetworkShape) -> Result<()> {
        let dims = shape.layer_dims();
        if self.layers.len() != dims.len() {
            return Err(Error::invalid(format!(
                "weight set has {} layers, shape expects {}",
                self.layers.len(),
                dims.len()
            )));
        }
        for (l, (m, (r, c))) in self.layers.iter().zip(dims).enumerate() {
            if m.dim() != (r, c) {
                return Err(Error::invalid(format!(
                    "layer {l} has shape {:?}, expected ({r}, {c})",
                    m.dim()
                )));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("layer {l} contains non-finite entries")));
            }
        }
        Ok(())
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|m| m.len()).sum()
    }

    /// Flatten layer by layer, row-major.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for m in &self.layers {
            out.extend(m.iter().copied());
        }
        out
    }

    pub fn from_flat(shape: &NetworkShape, flat: &[f64]) -> Result<Self> {
        if flat.len() != shape.n_params() {
            return Err(Error::invalid(format!(
                "flat vector has {} entries, shape expects {}",
                flat.len(),
                shape.n_params()
            )));
        }
        let mut layers = Vec::new();
        let mut off = 0;
        for (r, c) in shape.layer_dims() {
            let m = Array2::from_shape_vec((r, c), flat[off..off + r * c].to_vec())
                .expect("dimension arithmetic");
            layers.push(m);
            off += r * c;
        }
        Ok(WeightSet { layers })
    }
}

/// Training data: covariate matrix and response vector on `[0,1]`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::invalid("dataset must contain at least one row"));
        }
        if x.nrows() != y.len() {
            return Err(Error::invalid(format!(
                "covariate matrix has {} rows but response has {}",
                x.nrows(),
                y.len()
            )));
        }
        if let Some((i, _)) = x.outer_iter().enumerate().find(|(_, r)| r.iter().any(|v| !v.is_finite())) {
            return Err(Error::invalid(format!("non-finite covariate in row {i}")));
        }
        if let Some((i, &v)) = y.iter().enumerate().find(|(_, v)| !v.is_finite() || !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!(
                "response {v} in row {i} is outside [0,1]; scale it or enable normalization"
            )));
        }
        Ok(Dataset { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

/// Dropout masks for one mini-batch; entries are 0 or 1/(1-p) (inverted
/// dropout). `None` means the layer is left untouched.
pub(crate) struct DropoutMasks {
    pub input: Option<Array2<f64>>,
    pub hidden: Vec<Option<Array2<f64>>>,
}

/// Precomputed quantities for repeated likelihood evaluation on one dataset:
/// the covariate matrix and the basis values at each response.
pub(crate) struct LogLik {
    pub shape: NetworkShape,
    pub x: Array2<f64>,
    pub m: Array2<f64>,
}

impl LogLik {
    pub fn new(shape: &NetworkShape, basis: &SplineBasis, data: &Dataset) -> Result<Self> {
        if data.p() != shape.input {
            return Err(Error::invalid(format!(
                "dataset has {} covariates, network expects {}",
                data.p(),
                shape.input
            )));
        }
        if basis.size() != shape.output {
            return Err(Error::invalid(format!(
                "basis has {} functions, network output is {}",
                basis.size(),
                shape.output
            )));
        }
        let m = basis_matrix(basis, data.y.as_slice().expect("contiguous"));
        Ok(LogLik { shape: shape.clone(), x: data.x.clone(), m })
    }

    /// Restrict to a row subset (used for mini-batches and CV splits).
    pub fn select(&self, idx: &[usize]) -> LogLik {
        LogLik {
            shape: self.shape.clone(),
            x: self.x.select(Axis(0), idx),
            m: self.m.select(Axis(0), idx),
        }
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Sum of log mixture densities over all rows.
    pub fn value(&self, w: &WeightSet) -> Result<f64> {
        let theta = forward_batch(&self.shape, w, &self.x, None).theta;
        let f = (&theta * &self.m).sum_axis(Axis(1));
        let mut total = 0.0;
        for (i, &fi) in f.iter().enumerate() {
            if fi <= 0.0 {
                return Err(Error::ZeroDensity { obs: i });
            }
            total += fi.ln();
        }
        Ok(total)
    }

    /// Sum of log mixture densities and its gradient with respect to every
    /// weight entry (bias columns included).
    pub fn value_grad(&self, w: &WeightSet, masks: Option<&DropoutMasks>) -> Result<(f64, WeightSet)> {
        let cache = forward_batch(&self.shape, w, &self.x, masks);
        let theta = &cache.theta;
        let f = (theta * &self.m).sum_axis(Axis(1));
        let mut total = 0.0;
        for (i, &fi) in f.iter().enumerate() {
            if fi <= 0.0 {
                return Err(Error::ZeroDensity { obs: i });
            }
            total += fi.ln();
        }
        // d(sum ln f)/dz_L = theta * (m/f - 1) rowwise.
        let n = self.n();
        let k = self.shape.output;
        let mut delta = Array2::zeros((n, k));
        for i in 0..n {
            let fi = f[i];
            for j in 0..k {
                delta[[i, j]] = theta[[i, j]] * (self.m[[i, j]] / fi - 1.0);
            }
        }
        let grads = backward(&self.shape, w, &cache, delta);
        Ok((total, grads))
    }
}

/// Evaluate the basis at every response value: an `n x K` matrix.
pub(crate) fn basis_matrix(basis: &SplineBasis, y: &[f64]) -> Array2<f64> {
    let k = basis.size();
    let mut m = Array2::zeros((y.len(), k));
    let mut buf = vec![0.0; k];
    for (i, &yi) in y.iter().enumerate() {
        basis.eval_m_into(yi, &mut buf);
        m.row_mut(i).iter_mut().zip(&buf).for_each(|(d, &s)| *d = s);
    }
    m
}

struct ForwardCache {
    /// Masked input actually fed to layer 1.
    x_used: Array2<f64>,
    /// Per hidden layer: derivative of the (masked) activation wrt its
    /// pre-activation, and the masked activation itself.
    phi_prime: Vec<Array2<f64>>,
    act: Vec<Array2<f64>>,
    theta: Array2<f64>,
}

fn forward_batch(
    shape: &NetworkShape,
    w: &WeightSet,
    x: &Array2<f64>,
    masks: Option<&DropoutMasks>,
) -> ForwardCache {
    let x_used = match masks.and_then(|m| m.input.as_ref()) {
        Some(mask) => x * mask,
        None => x.clone(),
    };
    let n_hidden = shape.hidden.len();
    let mut phi_prime = Vec::with_capacity(n_hidden);
    let mut act = Vec::with_capacity(n_hidden);
    let mut a = x_used.clone();
    for l in 0..n_hidden {
        let z = affine(&a, &w.layers[l]);
        let (mut h, mut dh) = match shape.activation {
            Activation::Tanh => {
                let h = z.mapv(f64::tanh);
                let dh = h.mapv(|t| 1.0 - t * t);
                (h, dh)
            }
            Activation::Relu => {
                let h = z.mapv(|v| if v > 0.0 { v } else { 0.0 });
                let dh = z.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
                (h, dh)
            }
        };
        if let Some(mask) = masks.and_then(|m| m.hidden.get(l)).and_then(|m| m.as_ref()) {
            h *= mask;
            dh *= mask;
        }
        a = h.clone();
        act.push(h);
        phi_prime.push(dh);
    }
    let z_out = affine(&a, &w.layers[n_hidden]);
    let theta = softmax_rows(&z_out);
    ForwardCache { x_used, phi_prime, act, theta }
}

/// `a (n x V_{l-1})` through layer matrix `(V_l x (V_{l-1}+1))`:
/// bias column broadcast plus `a . W[:,1..]^T`.
fn affine(a: &Array2<f64>, w: &Array2<f64>) -> Array2<f64> {
    let bias = w.column(0);
    let weights = w.slice(s![.., 1..]);
    let mut z = a.dot(&weights.t());
    z += &bias;
    z
}

/// Row-wise softmax with max subtraction for overflow safety.
fn softmax_rows(z: &Array2<f64>) -> Array2<f64> {
    let mut out = z.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum: f64 = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Backpropagate `delta = d(loss)/dz_L` through the cached forward pass.
fn backward(shape: &NetworkShape, w: &WeightSet, cache: &ForwardCache, delta_out: Array2<f64>) -> WeightSet {
    let n_layers = shape.n_layers();
    let mut grads: Vec<Array2<f64>> = shape
        .layer_dims()
        .into_iter()
        .map(|(r, c)| Array2::zeros((r, c)))
        .collect();
    let mut delta = delta_out;
    for l in (0..n_layers).rev() {
        let below: &Array2<f64> = if l == 0 { &cache.x_used } else { &cache.act[l - 1] };
        {
            let g = &mut grads[l];
            let bias = delta.sum_axis(Axis(0));
            g.column_mut(0).assign(&bias);
            let gw = delta.t().dot(below);
            g.slice_mut(s![.., 1..]).assign(&gw);
        }
        if l > 0 {
            let weights = w.layers[l].slice(s![.., 1..]);
            delta = delta.dot(&weights);
            delta *= &cache.phi_prime[l - 1];
        }
    }
    WeightSet { layers: grads }
}

/// Mixture probabilities for a single covariate vector.
pub fn forward(shape: &NetworkShape, w: &WeightSet, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != shape.input {
        return Err(Error::invalid(format!(
            "input has {} entries, network expects {}",
            x.len(),
            shape.input
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite input"));
    }
    w.validate(shape)?;
    let xm = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row vector");
    let cache = forward_batch(shape, w, &xm, None);
    Ok(cache.theta.row(0).to_vec())
}

/// Log-likelihood of the spline mixture model: the sum over observations of
/// `log sum_k M_k(y_i) theta_k(x_i)`.
pub fn log_likelihood(
    shape: &NetworkShape,
    w: &WeightSet,
    data: &Dataset,
    basis: &SplineBasis,
) -> Result<f64> {
    w.validate(shape)?;
    LogLik::new(shape, basis, data)?.value(w)
}

/// Exact gradient of [`log_likelihood`] with respect to every weight entry.
pub fn grad_log_likelihood(
    shape: &NetworkShape,
    w: &WeightSet,
    data: &Dataset,
    basis: &SplineBasis,
) -> Result<WeightSet> {
    w.validate(shape)?;
    let (_, g) = LogLik::new(shape, basis, data)?.value_grad(w, None)?;
    Ok(g)
}
