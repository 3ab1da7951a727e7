//! Dual-averaging step-size adaptation toward a target acceptance rate,
//! with the usual constants gamma = 0.05, t0 = 10, kappa = 0.75.

use rand::Rng;

use crate::error::{Error, Result};

use super::hmc::leapfrog_step;
use super::mass::MassMatrix;
use super::{PhaseState, Target};

pub const DA_GAMMA: f64 = 0.05;
pub const DA_T0: f64 = 10.0;
pub const DA_KAPPA: f64 = 0.75;

#[derive(Debug, Clone)]
pub struct DualAveragingState {
    log_eps: f64,
    log_eps_avg: f64,
    h_bar: f64,
    mu: f64,
    count: u64,
}

impl DualAveragingState {
    /// Start from `eps0` with shrinkage target `mu = log(10 eps0)`.
    pub fn new(eps0: f64) -> Self {
        DualAveragingState {
            log_eps: eps0.ln(),
            log_eps_avg: eps0.ln(),
            h_bar: 0.0,
            mu: (10.0 * eps0).ln(),
            count: 1,
        }
    }

    /// One update toward the target acceptance `delta`.
    pub fn advance(&mut self, accept_stat: f64, delta: f64) {
        let w = 1.0 / (self.count as f64 + DA_T0);
        self.h_bar = (1.0 - w) * self.h_bar + w * (delta - accept_stat);
        self.log_eps = self.mu - self.h_bar * (self.count as f64).sqrt() / DA_GAMMA;
        let mk = (self.count as f64).powf(-DA_KAPPA);
        self.log_eps_avg = mk * self.log_eps + (1.0 - mk) * self.log_eps_avg;
        self.count += 1;
    }

    /// Step size for the next warmup iteration.
    pub fn current(&self) -> f64 {
        self.log_eps.exp()
    }

    /// Averaged iterate; the step size freezes here after warmup.
    pub fn adapted(&self) -> f64 {
        self.log_eps_avg.exp()
    }
}

/// Find an initial step size by doubling/halving until the one-step
/// acceptance probability crosses 1/2.
pub fn find_initial_stepsize<T: Target + ?Sized, R: Rng>(
    target: &T,
    mass: &MassMatrix,
    q0: &[f64],
    rng: &mut R,
) -> Result<f64> {
    let (logp, grad) = target.log_density_grad(q0);
    if !logp.is_finite() {
        return Err(Error::numerical(
            "log posterior is not finite at the initial point",
        ));
    }
    let state = PhaseState { q: q0.to_vec(), p: mass.sample_momentum(rng), logp, grad };
    let h0 = -state.logp + mass.kinetic(&state.p);
    let mut eps = 1.0;
    let ratio = |eps: f64| -> f64 {
        let next = leapfrog_step(target, mass, &state, eps);
        let h1 = -next.logp + mass.kinetic(&next.p);
        let r = (h0 - h1).exp();
        if r.is_finite() {
            r
        } else {
            0.0
        }
    };
    let r0 = ratio(eps);
    let dir: f64 = if r0 > 0.5 { 1.0 } else { -1.0 };
    for _ in 0..100 {
        let r = ratio(eps);
        if dir > 0.0 && r <= 0.5 {
            break;
        }
        if dir < 0.0 && r >= 0.5 {
            break;
        }
        eps *= 2.0f64.powf(dir);
        if !(1e-10..=1e10).contains(&eps) {
            return Err(Error::numerical(format!(
                "initial step-size search left ({eps:.3e}) sensible bounds"
            )));
        }
    }
    Ok(eps)
}
