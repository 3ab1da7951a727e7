//! Order-2 M-spline density basis and its I-spline integral basis on `[0,1]`.
//!
//! The basis has `K` functions over `K+2` knots: the boundary knots 0 and 1
//! are doubled and the `K-2` interior knots are equally spaced at `j/(K-1)`.
//! Each M-spline is a triangle density (piecewise linear, unit area), so any
//! convex combination is again a density; the I-splines are their running
//! integrals (piecewise quadratic, monotone from 0 to 1).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of basis functions accepted by the fitting entry points.
pub const MIN_BASIS_SIZE: usize = 5;

/// Knot layout and evaluators for the order-2 M-spline basis.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineBasis {
    k: usize,
    knots: Vec<f64>,
}

/// Construct the basis with `k` functions on equally spaced knots.
pub fn make_basis(k: usize) -> Result<SplineBasis> {
    SplineBasis::new(k)
}

impl SplineBasis {
    /// Construct the basis with `k` functions on equally spaced knots.
    ///
    /// Rejects `k < 5`: smaller bases underfit badly enough to be useless.
    pub fn new(k: usize) -> Result<Self> {
        if k < MIN_BASIS_SIZE {
            return Err(Error::invalid(format!(
                "number of basis functions must be at least {MIN_BASIS_SIZE}, got {k}"
            )));
        }
        let h = 1.0 / (k - 1) as f64;
        let mut knots = Vec::with_capacity(k + 2);
        knots.push(0.0);
        knots.push(0.0);
        for j in 1..=(k - 2) {
            knots.push(j as f64 * h);
        }
        knots.push(1.0);
        knots.push(1.0);
        Ok(SplineBasis { k, knots })
    }

    /// Number of basis functions.
    pub fn size(&self) -> usize {
        self.k
    }

    /// The full knot sequence (length `K + 2`, boundary knots doubled).
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Interior knot spacing `1/(K-1)`.
    pub fn spacing(&self) -> f64 {
        1.0 / (self.k - 1) as f64
    }

    fn check_domain(&self, y: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::invalid(format!(
                "evaluation point {y} outside [0,1]"
            )));
        }
        Ok(())
    }

    /// Evaluate all `K` M-spline densities at `y`.
    ///
    /// At most two entries are nonzero. Evaluation is right-continuous at
    /// interior knots; at `y = 1` the left limit is used so the last basis
    /// function stays positive.
    pub fn eval_m(&self, y: f64) -> Result<Vec<f64>> {
        self.check_domain(y)?;
        let mut out = vec![0.0; self.k];
        self.eval_m_into(y, &mut out);
        Ok(out)
    }

    /// Evaluate all `K` I-splines (running integrals of the M-splines) at `y`.
    pub fn eval_i(&self, y: f64) -> Result<Vec<f64>> {
        self.check_domain(y)?;
        let mut out = vec![0.0; self.k];
        self.eval_i_into(y, &mut out);
        Ok(out)
    }

    /// Closed-form M-spline evaluation without the domain check.
    ///
    /// `out` must have length `K`. Used on hot paths where `y` is known to
    /// lie in `[0,1]`.
    pub(crate) fn eval_m_into(&self, y: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.k);
        out.fill(0.0);
        let k = self.k;
        let h = self.spacing();
        // First function: falling edge on [0, h], peak 2/h at 0.
        if y < h {
            out[0] = (2.0 / h) * (1.0 - y / h);
        }
        // Last function: rising edge on [1-h, 1], peak 2/h at 1.
        if y >= 1.0 - h {
            out[k - 1] = (2.0 / h) * (y - (1.0 - h)) / h;
        }
        // Interior triangles: support [(i-1)h, (i+1)h], peak 1/h at i*h.
        // Only the two functions straddling y's cell can be nonzero.
        let cell = ((y / h) as usize).min(k - 2);
        let lo = cell.max(1);
        let hi = (cell + 1).min(k - 2);
        for i in lo..=hi {
            let u = y / h - (i - 1) as f64;
            if (0.0..2.0).contains(&u) {
                out[i] = if u <= 1.0 { u / h } else { (2.0 - u) / h };
            }
        }
    }

    /// Closed-form I-spline evaluation without the domain check.
    pub(crate) fn eval_i_into(&self, y: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.k);
        let k = self.k;
        let h = self.spacing();
        // First function: 1 - (1 - y/h)^2 on [0, h], then 1.
        out[0] = if y >= h {
            1.0
        } else {
            let t = 1.0 - y / h;
            1.0 - t * t
        };
        // Last function: ((y - (1-h))/h)^2 on [1-h, 1], else 0.
        out[k - 1] = if y < 1.0 - h {
            0.0
        } else {
            let t = (y - (1.0 - h)) / h;
            t * t
        };
        for i in 1..(k - 1) {
            let u = y / h - (i - 1) as f64;
            out[i] = if u <= 0.0 {
                0.0
            } else if u <= 1.0 {
                0.5 * u * u
            } else if u < 2.0 {
                let t = 2.0 - u;
                1.0 - 0.5 * t * t
            } else {
                1.0
            };
        }
    }
}
