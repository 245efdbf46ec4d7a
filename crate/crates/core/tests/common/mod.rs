#![allow(dead_code)]

use bae_core::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
/// Below this magnitude a partial is compared absolutely: central
/// differences of an O(1) loss carry ~1e-11 of rounding noise.
pub const REL_FLOOR: f64 = 1e-4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_batch(rows: usize, cols: usize, seed: u64) -> Tensor {
    let mut r = rng(seed);
    let data = (0..rows * cols)
        .map(|_| r.random_range(0.0..=1.0))
        .collect();
    Tensor::new(vec![rows, cols], data).unwrap()
}

/// Central finite differences of `f` with respect to every element of
/// `params`.
pub fn numeric_gradient(params: &[Tensor], f: impl Fn(&[Tensor]) -> f64) -> Vec<Tensor> {
    let mut work = params.to_vec();
    let mut out = Vec::with_capacity(params.len());
    for t in 0..params.len() {
        let mut g = Tensor::zeros(params[t].shape());
        for i in 0..params[t].len() {
            let orig = work[t].data()[i];
            work[t].data_mut()[i] = orig + FD_STEP;
            let up = f(&work);
            work[t].data_mut()[i] = orig - FD_STEP;
            let down = f(&work);
            work[t].data_mut()[i] = orig;
            g.data_mut()[i] = (up - down) / (2.0 * FD_STEP);
        }
        out.push(g);
    }
    out
}

/// Largest element-wise `|a − n| / max(|a|, |n|, floor)`.
pub fn max_relative_error(analytic: &[Tensor], numeric: &[Tensor], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .flat_map(|(a, n)| {
            assert_eq!(a.shape(), n.shape());
            a.data()
                .iter()
                .zip(n.data())
                .map(move |(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        })
        .fold(0.0, f64::max)
}
