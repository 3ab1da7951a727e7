//! Chain diagnostics.

/// Effective sample size of a scalar chain via Geyer's initial monotone
/// positive sequence of autocorrelation pairs.
pub fn effective_sample_size(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return n as f64;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let c0: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return n as f64;
    }
    let autocov = |lag: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..n - lag {
            s += (x[i] - mean) * (x[i + lag] - mean);
        }
        s / n as f64
    };
    let mut sum_rho = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 1;
    while lag + 1 < n {
        let pair = (autocov(lag) + autocov(lag + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        // Enforce monotone decrease of the pair sums.
        let pair = pair.min(prev_pair);
        sum_rho += pair;
        prev_pair = pair;
        lag += 2;
    }
    (n as f64 / (1.0 + 2.0 * sum_rho)).min(n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn iid_chain_has_near_full_ess() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..4000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ess = effective_sample_size(&x);
        assert!(ess > 2000.0, "ess {ess}");
    }

    #[test]
    fn sticky_chain_has_low_ess() {
        // AR(1) with coefficient 0.95: ESS should be a small fraction of n.
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut x = vec![0.0f64; 4000];
        for i in 1..x.len() {
            x[i] = 0.95 * x[i - 1] + rng.random_range(-1.0..1.0);
        }
        let ess = effective_sample_size(&x);
        assert!(ess < 500.0, "ess {ess}");
    }
}
