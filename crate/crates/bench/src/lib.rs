//! Shared fixtures for the benchmarks.

use bae_core::nn::{init_params, AeArchitecture};
use bae_core::{AeModel, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Image side and hidden width used throughout the benches.
pub const SIDE: usize = 28;
pub const HIDDEN: usize = 128;
pub const LATENT: usize = 20;

pub fn uniform(rows: usize, cols: usize, seed: u64) -> Tensor {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols)
        .map(|_| r.random_range(0.0..=1.0))
        .collect();
    Tensor::new(vec![rows, cols], data).expect("shape matches data")
}

pub fn scores(n: usize, seed: u64) -> Vec<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| r.random::<f64>()).collect()
}

pub fn mnist_sized_model(seed: u64) -> AeModel {
    let arch = AeArchitecture::autoencoder(SIDE * SIDE, &[HIDDEN], LATENT).expect("valid widths");
    init_params(&arch, seed).expect("valid architecture")
}
