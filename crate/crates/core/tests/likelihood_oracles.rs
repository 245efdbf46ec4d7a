#![allow(clippy::excessive_precision)]

use bae_core::likelihood::{
    bernoulli_ll, cont_bernoulli_ll, gaussian_ll, log_cb_normalizer, max_ll_curve,
};
use bae_core::nn::OUTPUT_CLAMP;
use bae_core::LikelihoodKind;

// Reference values evaluated with 50-digit decimal arithmetic.
const BERNOULLI_FIXTURE: f64 = -0.368_912_835_928_133_15;
const LOG_C_09: f64 = 1.010_338_559_490_854_1;
const LOG_C_REFERENCE: [(f64, f64); 5] = [
    (0.50003, 0.693_147_181_759_945_31),
    (0.4999, 0.693_147_193_893_278_87),
    (0.5001, 0.693_147_193_893_278_87),
    (0.3, 0.750_587_750_880_458_75),
    (0.01, 1.545_197_545_512_897_3),
];

#[test]
fn bernoulli_midpoint_is_ln_half() {
    let v = bernoulli_ll(&[0.5], &[0.5]).unwrap();
    assert!((v - 0.5f64.ln()).abs() < 1e-15);
}

#[test]
fn bernoulli_zero_pixel_at_clamp_floor_is_near_zero() {
    let v = bernoulli_ll(&[0.0], &[OUTPUT_CLAMP]).unwrap();
    assert!(v <= 0.0 && v > -1e-6);
}

#[test]
fn bernoulli_two_pixel_fixture() {
    let v = bernoulli_ll(&[1.0, 0.3], &[0.9, 0.4]).unwrap();
    assert!((v - BERNOULLI_FIXTURE).abs() < 1e-12, "{v}");
}

#[test]
fn bernoulli_rejects_boundary_reconstructions() {
    assert!(bernoulli_ll(&[0.5], &[0.0]).is_err());
    assert!(bernoulli_ll(&[0.5], &[1.0]).is_err());
}

#[test]
fn cb_normalizer_reference_values() {
    assert!((log_cb_normalizer(0.5) - std::f64::consts::LN_2).abs() < 1e-15);
    assert!((log_cb_normalizer(0.9) - LOG_C_09).abs() < 1e-12);
    assert!((LOG_C_09 - 1.0104).abs() < 1e-4);
    for (lambda, expected) in LOG_C_REFERENCE {
        let got = log_cb_normalizer(lambda);
        assert!(
            (got - expected).abs() < 1e-12,
            "lambda {lambda}: {got} vs {expected}"
        );
    }
}

#[test]
fn cb_normalizer_is_continuous_across_the_taylor_switch() {
    let edge = 1e-4;
    for side in [-1.0, 1.0] {
        let inside = log_cb_normalizer(0.5 + side * edge * (1.0 - 1e-9));
        let outside = log_cb_normalizer(0.5 + side * edge * (1.0 + 1e-9));
        assert!((inside - outside).abs() < 1e-13, "{inside} vs {outside}");
    }
}

#[test]
fn cb_exceeds_bernoulli_by_at_least_ln2() {
    let x = [0.0, 0.2, 0.5, 0.9, 1.0];
    let xh = [0.01, 0.3, 0.5, 0.7, 0.999];
    let b = bernoulli_ll(&x, &xh).unwrap();
    let c = cont_bernoulli_ll(&x, &xh).unwrap();
    assert!(c >= b + std::f64::consts::LN_2 - 1e-15);
}

#[test]
fn gaussian_examples() {
    assert_eq!(gaussian_ll(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
    assert_eq!(gaussian_ll(&[1.0], &[0.0]).unwrap(), -0.5);
}

#[test]
fn gaussian_is_minus_half_mse() {
    let x: Vec<f64> = (0..16).map(|i| ((i * 7) % 16) as f64 / 15.0).collect();
    let y: Vec<f64> = (0..16).map(|i| ((i * 5 + 3) % 16) as f64 / 15.0).collect();
    let mut sq = 0.0;
    for i in 0..16 {
        sq += (x[i] - y[i]).powi(2);
    }
    let mse = sq / 16.0;
    assert!((gaussian_ll(&x, &y).unwrap() + mse / 2.0).abs() < 1e-15);
}

#[test]
fn bernoulli_max_curve_matches_dense_grid_search() {
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let curve = max_ll_curve(LikelihoodKind::Bernoulli, &grid).unwrap();
    let candidates: Vec<f64> = (0..=10_000)
        .map(|j| (j as f64 / 10_000.0).clamp(OUTPUT_CLAMP, 1.0 - OUTPUT_CLAMP))
        .collect();
    for (&x, &(cx, best)) in grid.iter().zip(&curve) {
        assert_eq!(x, cx);
        let brute = candidates
            .iter()
            .map(|&xh| x * xh.ln() + (1.0 - x) * (1.0 - xh).ln())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((best - brute).abs() < 1e-6, "x={x}: {best} vs {brute}");
    }
    assert_eq!(curve[0].1, 0.0);
    assert_eq!(curve[100].1, 0.0);
    assert!((curve[50].1 - 0.5f64.ln()).abs() < 1e-9);
}

#[test]
fn gaussian_max_curve_is_zero() {
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let curve = max_ll_curve(LikelihoodKind::GaussianUnit, &grid).unwrap();
    assert!(curve.iter().all(|&(_, v)| v == 0.0));
}

#[test]
fn cb_max_curve_dominates_bernoulli_by_ln2() {
    let grid: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
    let b = max_ll_curve(LikelihoodKind::Bernoulli, &grid).unwrap();
    let c = max_ll_curve(LikelihoodKind::ContinuousBernoulli, &grid).unwrap();
    for ((x, vb), (_, vc)) in b.iter().zip(&c) {
        assert!(*vc >= vb + std::f64::consts::LN_2 - 1e-12, "x={x}");
    }
}
