//! Small scalar helpers shared by the encoding and fast-approximation paths.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `log(1 + exp(x))`, evaluated without overflow for large `x`.
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Inverse of [`softplus`] for `y > 0`.
pub fn softplus_inv(y: f64) -> f64 {
    // log(exp(y) - 1) = y + log(1 - exp(-y))
    y + (-(-y).exp()).ln_1p()
}

/// Logistic sigmoid, stable for both signs of `x`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Deterministic generator used for every seeded draw in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_round_trips() {
        for y in [1e-3, 0.15, 0.61, 1.0, 2.62205755429212, 40.0] {
            let x = softplus_inv(y);
            assert!((softplus(x) - y).abs() <= 1e-12 * y.max(1.0), "{y}");
        }
    }

    #[test]
    fn sigmoid_endpoints() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(1.0 - sigmoid(20.0) < 3e-9);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(800.0) <= 1.0);
    }
}
