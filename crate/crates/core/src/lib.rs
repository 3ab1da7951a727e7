//! Semi-parametric conditional density and quantile regression.
//!
//! The conditional density of a response on `[0,1]` is modeled as a convex
//! mixture of order-2 M-spline basis densities whose mixture weights are
//! produced by a fully connected neural network with softmax output. Because
//! the implied CDF is the same convex combination of monotone I-splines,
//! quantile curves obtained by inverting it are valid and never cross, with
//! no second-stage monotonization.
//!
//! Three estimation routes are provided:
//!
//! * [`trainer::fit_mle`] — maximum likelihood via Adam with mini-batches
//!   and validation-based early stopping;
//! * [`trainer::fit_map`] — maximum a posteriori under hierarchical normal
//!   priors, optimized in the non-centered parameterization;
//! * [`sampler::run_chain`] — fully Bayesian NUTS/HMC on the weights
//!   interleaved with conjugate Gibbs updates of the prior scales.
//!
//! Post-fit tools live in [`interpret`]: quantile accumulated local effects,
//! ALE-induced variable importance, PIT goodness-of-fit, and WAIC/LOO
//! information criteria. [`persist`] defines the on-disk model container and
//! [`sim`] generates the Beta-regression benchmark dataset.

pub mod basis;
pub mod error;
pub mod interpret;
pub mod model;
pub mod network;
pub mod persist;
pub mod priors;
pub mod sampler;
pub mod sim;
pub mod trainer;

pub use basis::SplineBasis;
pub use error::{Error, Result};
pub use model::{FittedModel, Method, Normalization, PredictKind, PredictionResult};
pub use network::{Activation, Dataset, NetworkShape, WeightSet};
pub use priors::{PriorConfig, PriorVariant, ScaleState};
pub use sampler::McmcControl;
pub use trainer::{FoldAssignment, TrainControl};
