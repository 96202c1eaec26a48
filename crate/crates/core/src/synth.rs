//! Synthetic two-blob classification data for desk-scale experiments and
//! oracle checks: Gaussian clouds with unit covariance centered at
//! `+1/sqrt(d)` and `-1/sqrt(d)` in every coordinate, labeled by blob.

use crate::data::{SparseDataset, SparseVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn two_gaussians(n: usize, d: usize, seed: u64) -> SparseDataset {
    assert!(n >= 1 && d >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // a separate stream for the data keeps it independent of any solver
    // seeded from the same value
    rng.set_stream(0x64617461); // "data"
    let shift = 1.0 / (d as f64).sqrt();
    let mut examples = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let y: f64 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let mean = y * shift;
        let dense: Vec<f64> = (0..d)
            .map(|_| mean + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        examples.push(SparseVector::from_dense(&dense));
        labels.push(y);
    }
    SparseDataset::new(examples, labels).expect("n >= 1")
}
