//! Fixtures shared by the criterion benches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ocms::cms::{encode_all, EstimatorParams, RangeMode};
use ocms::Report;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` values drawn uniformly from `[0, d)`.
pub fn uniform_values(n: usize, d: u64, seed: u64) -> Vec<u64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random_range(0..d)).collect()
}

/// MSE-optimal parameters and `n` encoded reports over a `d`-value dictionary.
pub fn encoded(n: usize, d: u64, epsilon: f64) -> (EstimatorParams, Vec<Report>) {
    let params = EstimatorParams::new(epsilon, d, RangeMode::MseOpt, 1.0).expect("valid parameters");
    let values = uniform_values(n, d, 1);
    let reports = encode_all(&values, &params, &mut rng(2)).expect("values lie in the dictionary");
    (params, reports)
}
