//! Shared fixtures for the criterion benchmarks.

use fpnoise_core::matmul::{standard_normal_vec, Matrix};
use fpnoise_core::PrecisionFormat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded standard-normal input vector and weight matrix, rounded to `fmt`.
pub fn fixture(d_in: usize, d_out: usize, fmt: PrecisionFormat, seed: u64) -> (Vec<f64>, Matrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = standard_normal_vec(d_in, fmt, &mut rng);
    let w = Matrix::standard_normal(d_in, d_out, fmt, &mut rng);
    (x, w)
}
