//! Leapfrog integrator and the fixed-length HMC transition.

use rand::Rng;

use crate::error::{Error, Result};

use super::mass::MassMatrix;
use super::{PhaseState, Target, Transition, DIVERGENCE_THRESHOLD};

/// One half-kick / drift / half-kick step from `state` with signed step
/// `eps`. The returned state carries the refreshed log-density and gradient.
pub(crate) fn leapfrog_step<T: Target + ?Sized>(
    target: &T,
    mass: &MassMatrix,
    state: &PhaseState,
    eps: f64,
) -> PhaseState {
    let dim = state.q.len();
    let mut p = state.p.clone();
    for i in 0..dim {
        p[i] += 0.5 * eps * state.grad[i];
    }
    let v = mass.velocity(&p);
    let mut q = state.q.clone();
    for i in 0..dim {
        q[i] += eps * v[i];
    }
    let (logp, grad) = target.log_density_grad(&q);
    for i in 0..dim {
        p[i] += 0.5 * eps * grad[i];
    }
    PhaseState { q, p, logp, grad }
}

/// Integrate `n_steps` leapfrog steps of size `eps` against the negative
/// log-posterior. Returns the final position, momentum, and the energy
/// error `H_final - H_initial`.
///
/// A non-finite energy along the trajectory is flagged as a divergence
/// carrying the offending step index. The integration is reversible:
/// negating the final momentum and integrating again recovers the start.
pub fn leapfrog<T: Target + ?Sized>(
    target: &T,
    mass: &MassMatrix,
    q: &[f64],
    p: &[f64],
    eps: f64,
    n_steps: usize,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    if !(eps > 0.0) {
        return Err(Error::invalid("leapfrog step size must be positive"));
    }
    if n_steps == 0 {
        return Err(Error::invalid("leapfrog requires at least one step"));
    }
    let (logp, grad) = target.log_density_grad(q);
    let mut state = PhaseState { q: q.to_vec(), p: p.to_vec(), logp, grad };
    let h0 = -state.logp + mass.kinetic(&state.p);
    if !h0.is_finite() {
        return Err(Error::numerical("non-finite energy at the starting point"));
    }
    for step in 0..n_steps {
        state = leapfrog_step(target, mass, &state, eps);
        let h = -state.logp + mass.kinetic(&state.p);
        if !h.is_finite() {
            return Err(Error::numerical(format!(
                "divergence at leapfrog step {step}: non-finite energy"
            )));
        }
    }
    let h1 = -state.logp + mass.kinetic(&state.p);
    Ok((state.q, state.p, h1 - h0))
}

/// Number of leapfrog steps for an integration time: `max(1, floor(t/eps))`.
pub fn n_leapfrog_steps(int_time: f64, eps: f64) -> usize {
    ((int_time / eps).floor() as usize).max(1)
}

/// One fixed-length HMC transition: refresh momentum from `N(0, M)`, run
/// `floor(int_time/eps)` leapfrog steps, and accept with a Metropolis step.
pub fn hmc_transition<T: Target + ?Sized, R: Rng>(
    target: &T,
    mass: &MassMatrix,
    q0: &[f64],
    eps: f64,
    int_time: f64,
    rng: &mut R,
) -> Transition {
    let (logp0, grad0) = target.log_density_grad(q0);
    let p0 = mass.sample_momentum(rng);
    let h0 = -logp0 + mass.kinetic(&p0);
    let n_steps = n_leapfrog_steps(int_time, eps);
    let mut state = PhaseState { q: q0.to_vec(), p: p0, logp: logp0, grad: grad0 };
    let mut divergent = false;
    for _ in 0..n_steps {
        state = leapfrog_step(target, mass, &state, eps);
        let h = -state.logp + mass.kinetic(&state.p);
        if !h.is_finite() || h - h0 > DIVERGENCE_THRESHOLD {
            divergent = true;
            break;
        }
    }
    if divergent {
        return Transition {
            q: q0.to_vec(),
            logp: logp0,
            accept_stat: 0.0,
            accepted: false,
            divergent: true,
            depth: 0,
            n_leapfrog: n_steps,
        };
    }
    let h1 = -state.logp + mass.kinetic(&state.p);
    let alpha = (h0 - h1).exp().min(1.0);
    let accepted = rng.random::<f64>() < alpha;
    Transition {
        q: if accepted { state.q } else { q0.to_vec() },
        logp: if accepted { state.logp } else { logp0 },
        accept_stat: alpha,
        accepted,
        divergent: false,
        depth: 0,
        n_leapfrog: n_steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::test_targets::{Quadratic, StdNormal};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn hand_computed_single_step() {
        // Potential q^2/2 with unit mass from (q,p) = (1,0), eps = 0.1:
        // p_half = -0.05, q' = 0.995, p' = -0.09975.
        let target = Quadratic;
        let mass = MassMatrix::unit(1);
        let (q, p, _dh) = leapfrog(&target, &mass, &[1.0], &[0.0], 0.1, 1).unwrap();
        assert_abs_diff_eq!(q[0], 0.995, epsilon = 1e-15);
        assert_abs_diff_eq!(p[0], -0.09975, epsilon = 1e-15);
    }

    #[test]
    fn reversibility() {
        let target = StdNormal { dim: 4 };
        let mass = MassMatrix::Diag { inv_diag: vec![0.5, 1.0, 2.0, 1.5] };
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let q0: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p0 = mass.sample_momentum(&mut rng);
        let (q1, p1, _) = leapfrog(&target, &mass, &q0, &p0, 0.15, 20).unwrap();
        let neg_p1: Vec<f64> = p1.iter().map(|v| -v).collect();
        let (q2, p2, _) = leapfrog(&target, &mass, &q1, &neg_p1, 0.15, 20).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(q2[i], q0[i], epsilon = 1e-10);
            assert_abs_diff_eq!(-p2[i], p0[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn energy_error_is_second_order() {
        let target = StdNormal { dim: 2 };
        let mass = MassMatrix::unit(2);
        let q = [0.7, -0.3];
        let p = [0.4, 0.9];
        // Fixed integration time t = 0.8 at three step sizes.
        let dh = |eps: f64| {
            let n = (0.8 / eps).round() as usize;
            leapfrog(&target, &mass, &q, &p, eps, n).unwrap().2.abs()
        };
        let (e1, e2, e3) = (dh(0.1), dh(0.05), dh(0.025));
        // Halving eps should reduce the error by roughly 4x each time.
        assert!(e1 / e2 > 3.0 && e1 / e2 < 5.0, "ratio {}", e1 / e2);
        assert!(e2 / e3 > 3.0 && e2 / e3 < 5.0, "ratio {}", e2 / e3);
    }

    #[test]
    fn volume_preservation_via_jacobian() {
        // Finite-difference Jacobian of one leapfrog step on a 1-D system:
        // the (q,p) -> (q',p') map must have determinant 1.
        let target = Quadratic;
        let mass = MassMatrix::unit(1);
        let eps = 0.2;
        let h = 1e-6;
        let map = |q: f64, p: f64| {
            let (logp, grad) = target.log_density_grad(&[q]);
            let s = PhaseState { q: vec![q], p: vec![p], logp, grad };
            let out = leapfrog_step(&target, &mass, &s, eps);
            (out.q[0], out.p[0])
        };
        let (q0, p0) = (0.4, -0.7);
        let (qa, pa) = map(q0 + h, p0);
        let (qb, pb) = map(q0 - h, p0);
        let (qc, pc) = map(q0, p0 + h);
        let (qd, pd) = map(q0, p0 - h);
        let dq_dq = (qa - qb) / (2.0 * h);
        let dp_dq = (pa - pb) / (2.0 * h);
        let dq_dp = (qc - qd) / (2.0 * h);
        let dp_dp = (pc - pd) / (2.0 * h);
        let det = dq_dq * dp_dp - dq_dp * dp_dq;
        assert_abs_diff_eq!(det, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn step_count_floor_rule() {
        assert_eq!(n_leapfrog_steps(1.0, 0.3), 3);
        assert_eq!(n_leapfrog_steps(1.0, 0.5), 2);
        assert_eq!(n_leapfrog_steps(1.0, 2.0), 1);
    }

    #[test]
    fn oversized_step_reduces_acceptance() {
        // Past the stability limit of the quadratic target, the energy error
        // grows and the acceptance probability drops below 1.
        let target = Quadratic;
        let mass = MassMatrix::unit(1);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut below_one = 0;
        for _ in 0..50 {
            let t = hmc_transition(&target, &mass, &[1.2], 1.9, 5.7, &mut rng);
            if t.accept_stat < 1.0 {
                below_one += 1;
            }
        }
        assert!(below_one > 25, "only {below_one}/50 transitions felt the energy error");
    }
}
