//! Seeded, stream-splittable randomness.
//!
//! Every consumer asks for a stream by index, so results never depend on the
//! order in which parallel workers draw numbers.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

/// A ChaCha20 generator positioned on stream `stream` of `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, std: f64) -> DMatrix<f64> {
    // Filled row by row so that a matrix is reproducible from its text form.
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let g: f64 = rng.sample(StandardNormal);
            m[(i, j)] = std * g;
        }
    }
    m
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, len: usize, std: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| {
        let g: f64 = rng.sample(StandardNormal);
        std * g
    })
}

pub fn uniform_vector<R: Rng>(rng: &mut R, lo: &DVector<f64>, hi: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(lo.len(), |i, _| {
        let u: f64 = rng.random();
        lo[i] + u * (hi[i] - lo[i])
    })
}
