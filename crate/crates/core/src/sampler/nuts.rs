//! No-U-turn transition: doubling tree construction with slice-sampling
//! acceptance, per-subtree U-turn termination, and a configurable depth cap.
//!
//! This is the original slice formulation; the U-turn criterion uses
//! velocities `M^{-1} p` so it remains correct under non-unit metrics.

use rand::Rng;

use super::hmc::leapfrog_step;
use super::mass::MassMatrix;
use super::{PhaseState, Target, Transition, DIVERGENCE_THRESHOLD};

struct Tree {
    minus: PhaseState,
    plus: PhaseState,
    proposal: Vec<f64>,
    proposal_logp: f64,
    /// Number of slice-admissible states in the tree.
    n: f64,
    valid: bool,
    divergent: bool,
    alpha: f64,
    n_alpha: f64,
    n_leapfrog: usize,
}

fn uturn(minus: &PhaseState, plus: &PhaseState, mass: &MassMatrix) -> bool {
    let dq: Vec<f64> = plus.q.iter().zip(&minus.q).map(|(a, b)| a - b).collect();
    let vm = mass.velocity(&minus.p);
    let vp = mass.velocity(&plus.p);
    let fwd: f64 = dq.iter().zip(&vp).map(|(a, b)| a * b).sum();
    let bwd: f64 = dq.iter().zip(&vm).map(|(a, b)| a * b).sum();
    fwd < 0.0 || bwd < 0.0
}

#[allow(clippy::too_many_arguments)]
fn build_tree<T: Target + ?Sized, R: Rng>(
    target: &T,
    mass: &MassMatrix,
    from: &PhaseState,
    log_u: f64,
    dir: f64,
    depth: usize,
    eps: f64,
    h0: f64,
    rng: &mut R,
) -> Tree {
    if depth == 0 {
        let state = leapfrog_step(target, mass, from, dir * eps);
        let h = -state.logp + mass.kinetic(&state.p);
        let joint = if h.is_finite() { -h } else { f64::NEG_INFINITY };
        let n = if log_u <= joint { 1.0 } else { 0.0 };
        let divergent = log_u - DIVERGENCE_THRESHOLD > joint;
        let alpha = (h0 - h).exp().min(1.0);
        return Tree {
            proposal: state.q.clone(),
            proposal_logp: state.logp,
            minus: state.clone(),
            plus: state,
            n,
            valid: !divergent,
            divergent,
            alpha: if alpha.is_finite() { alpha } else { 0.0 },
            n_alpha: 1.0,
            n_leapfrog: 1,
        };
    }
    let mut first = build_tree(target, mass, from, log_u, dir, depth - 1, eps, h0, rng);
    if !first.valid {
        return first;
    }
    let grow_from = if dir < 0.0 { first.minus.clone() } else { first.plus.clone() };
    let second = build_tree(target, mass, &grow_from, log_u, dir, depth - 1, eps, h0, rng);
    if dir < 0.0 {
        first.minus = second.minus;
    } else {
        first.plus = second.plus;
    }
    let total = first.n + second.n;
    if second.n > 0.0 && rng.random::<f64>() < second.n / total {
        first.proposal = second.proposal;
        first.proposal_logp = second.proposal_logp;
    }
    first.n = total;
    first.alpha += second.alpha;
    first.n_alpha += second.n_alpha;
    first.n_leapfrog += second.n_leapfrog;
    first.divergent |= second.divergent;
    first.valid = second.valid && !uturn(&first.minus, &first.plus, mass);
    first
}

/// One NUTS transition from `q0`.
///
/// The trajectory doubles until a U-turn, a divergence, or the depth cap;
/// `max_treedepth = 0` degenerates to a single leapfrog-step proposal. The
/// returned `accept_stat` averages the Metropolis statistic over all
/// trajectory states, which drives dual averaging.
pub fn nuts_transition<T: Target + ?Sized, R: Rng>(
    target: &T,
    mass: &MassMatrix,
    q0: &[f64],
    eps: f64,
    max_treedepth: usize,
    rng: &mut R,
) -> Transition {
    let (logp0, grad0) = target.log_density_grad(q0);
    let p0 = mass.sample_momentum(rng);
    let h0 = -logp0 + mass.kinetic(&p0);
    let start = PhaseState { q: q0.to_vec(), p: p0, logp: logp0, grad: grad0 };
    // u ~ Uniform(0, exp(-h0)) drawn in log space.
    let log_u = rng.random::<f64>().ln() - h0;

    let mut minus = start.clone();
    let mut plus = start;
    let mut proposal = q0.to_vec();
    let mut proposal_logp = logp0;
    let mut n = 1.0f64;
    let mut divergent = false;
    let mut alpha_sum = 0.0;
    let mut n_alpha = 0.0;
    let mut n_leapfrog = 0usize;
    let mut depth_used = 0u32;

    for depth in 0..=max_treedepth {
        let dir: f64 = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let from = if dir < 0.0 { minus.clone() } else { plus.clone() };
        let tree = build_tree(target, mass, &from, log_u, dir, depth, eps, h0, rng);
        if dir < 0.0 {
            minus = tree.minus;
        } else {
            plus = tree.plus;
        }
        alpha_sum += tree.alpha;
        n_alpha += tree.n_alpha;
        n_leapfrog += tree.n_leapfrog;
        divergent |= tree.divergent;
        depth_used = depth as u32 + 1;
        if tree.valid && tree.n > 0.0 && rng.random::<f64>() < (tree.n / n).min(1.0) {
            proposal = tree.proposal;
            proposal_logp = tree.proposal_logp;
        }
        n += tree.n;
        if !tree.valid || uturn(&minus, &plus, mass) {
            break;
        }
    }

    let accepted = proposal != q0;
    Transition {
        q: proposal,
        logp: proposal_logp,
        accept_stat: if n_alpha > 0.0 { alpha_sum / n_alpha } else { 0.0 },
        accepted,
        divergent,
        depth: depth_used,
        n_leapfrog,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::test_targets::StdNormal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn depth_zero_is_single_leapfrog() {
        let target = StdNormal { dim: 3 };
        let mass = MassMatrix::unit(3);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..20 {
            let t = nuts_transition(&target, &mass, &[0.1, -0.2, 0.3], 0.25, 0, &mut rng);
            assert_eq!(t.n_leapfrog, 1);
            assert_eq!(t.depth, 1);
        }
    }

    #[test]
    fn depth_cap_bounds_trajectory_length() {
        let target = StdNormal { dim: 2 };
        let mass = MassMatrix::unit(2);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for _ in 0..20 {
            // Tiny step size wants long trajectories; the cap must hold.
            let t = nuts_transition(&target, &mass, &[1.0, 1.0], 0.01, 4, &mut rng);
            assert!(t.n_leapfrog <= 1 + 2 + 4 + 8 + 16);
            assert!(t.depth <= 5);
        }
    }

    #[test]
    fn samples_standard_normal() {
        let target = StdNormal { dim: 3 };
        let mass = MassMatrix::unit(3);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut q = vec![0.0; 3];
        // Short warmup at a hand-picked step size.
        for _ in 0..200 {
            q = nuts_transition(&target, &mass, &q, 0.4, 6, &mut rng).q;
        }
        let n = 3000;
        let mut mean = vec![0.0; 3];
        let mut var = vec![0.0; 3];
        for _ in 0..n {
            let t = nuts_transition(&target, &mass, &q, 0.4, 6, &mut rng);
            q = t.q;
            for d in 0..3 {
                mean[d] += q[d];
                var[d] += q[d] * q[d];
            }
        }
        for d in 0..3 {
            mean[d] /= n as f64;
            var[d] = var[d] / n as f64 - mean[d] * mean[d];
            assert!(mean[d].abs() < 0.1, "mean[{d}] = {}", mean[d]);
            assert!((var[d] - 1.0).abs() < 0.15, "var[{d}] = {}", var[d]);
        }
    }
}
