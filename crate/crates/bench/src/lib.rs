//! Deterministic inputs for the kernel benchmarks.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FS: f64 = 2000.0;

pub fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
}

/// `k` uniform sources mixed into `k` channels by a random matrix.
pub fn mixed(k: usize, n: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = Array2::from_shape_fn((k, n), |_| rng.random::<f64>() - 0.5);
    let a = Array2::from_shape_fn((k, k), |_| rng.random::<f64>() - 0.5);
    a.dot(&s)
}
