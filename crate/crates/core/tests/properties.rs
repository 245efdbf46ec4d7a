mod common;

use std::io::Cursor;

use bae_core::data::{read_idx, write_idx};
use bae_core::likelihood::{bernoulli_ll, cont_bernoulli_ll, gaussian_ll};
use bae_core::metrics::{auroc, fpr_at_tpr, pearson, ssim, ImageView};
use bae_core::nn::{init_params, read_layers, write_layers, AeArchitecture};
use bae_core::scoring::{predictive_moments, score_input};
use bae_core::{LikelihoodKind, Split, Tensor};
use common::{max_relative_error, numeric_gradient, REL_FLOOR};
use proptest::prelude::*;

fn interior() -> impl Strategy<Value = f64> {
    0.001f64..0.999
}

fn pixels(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..=1.0, n)
}

fn int_scores() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec((-20i32..20).prop_map(f64::from), 1..40)
}

proptest! {
    #[test]
    fn bernoulli_is_maximised_at_the_target(x in interior(), xh in interior()) {
        prop_assume!((x - xh).abs() > 1e-6);
        prop_assert!(bernoulli_ll(&[x], &[xh]).unwrap() < bernoulli_ll(&[x], &[x]).unwrap());
    }

    #[test]
    fn bernoulli_mirror_symmetry(x in 0.0f64..=1.0, xh in interior()) {
        let a = bernoulli_ll(&[x], &[xh]).unwrap();
        let b = bernoulli_ll(&[1.0 - x], &[1.0 - xh]).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn boundary_pixels_dominate_interior_maxima(x in interior()) {
        let interior_max = bernoulli_ll(&[x], &[x]).unwrap();
        prop_assert!(interior_max < 0.0);
        prop_assert!(bernoulli_ll(&[0.0], &[1e-12]).unwrap() > interior_max);
    }

    #[test]
    fn cb_offset_is_at_least_ln2(x in pixels(6), xh in proptest::collection::vec(interior(), 6)) {
        let d = cont_bernoulli_ll(&x, &xh).unwrap() - bernoulli_ll(&x, &xh).unwrap();
        prop_assert!(d >= std::f64::consts::LN_2 - 1e-12);
    }

    #[test]
    fn gaussian_is_half_negative_mse(x in pixels(8), y in pixels(8)) {
        let mse = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / 8.0;
        let g = gaussian_ll(&x, &y).unwrap();
        prop_assert!(g <= 0.0);
        prop_assert!((g + mse / 2.0).abs() <= 1e-15);
    }

    #[test]
    fn auroc_is_invariant_to_increasing_transforms(o in int_scores(), i in int_scores()) {
        let f = |v: &f64| v * v * v + 2.0 * v;
        let (o2, i2): (Vec<f64>, Vec<f64>) = (o.iter().map(f).collect(), i.iter().map(f).collect());
        prop_assert_eq!(auroc(&o, &i).unwrap(), auroc(&o2, &i2).unwrap());
    }

    #[test]
    fn auroc_complement_without_ties(v in proptest::collection::hash_set(-1000i32..1000, 2..60), split in 1usize..59) {
        let v: Vec<f64> = v.into_iter().map(f64::from).collect();
        let k = split.min(v.len() - 1);
        let (o, i) = v.split_at(k);
        let sum = auroc(o, i).unwrap() + auroc(i, o).unwrap();
        prop_assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fpr_is_monotone_in_the_target(o in int_scores(), i in int_scores(), a in 0.05f64..1.0, b in 0.05f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(fpr_at_tpr(&o, &i, lo).unwrap() <= fpr_at_tpr(&o, &i, hi).unwrap());
    }

    #[test]
    fn pearson_affine_invariance(
        pts in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40),
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        if let Ok(r) = pearson(&a, &b) {
            let a2: Vec<f64> = a.iter().map(|v| scale * v + shift).collect();
            let neg: Vec<f64> = b.iter().map(|v| -v).collect();
            prop_assert!((pearson(&a2, &b).unwrap() - r).abs() < 1e-9);
            prop_assert!((pearson(&a, &neg).unwrap() + r).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn ssim_never_exceeds_one(x in pixels(81), y in pixels(81)) {
        let s = ssim(&ImageView::new(&x, 9, 9).unwrap(), &ImageView::new(&y, 9, 9).unwrap()).unwrap();
        prop_assert!(s <= 1.0 + 1e-9);
        if x != y {
            prop_assert!(s < 1.0);
        }
    }

    #[test]
    fn scores_are_invariant_to_sample_order(
        x in pixels(5),
        samples in proptest::collection::vec(proptest::collection::vec(interior(), 5), 1..8),
        rot in 0usize..8,
    ) {
        let mut permuted = samples.clone();
        let k = rot % permuted.len();
        permuted.rotate_left(k);
        permuted.reverse();
        let rows: Vec<&[f64]> = samples.iter().map(Vec::as_slice).collect();
        let prow: Vec<&[f64]> = permuted.iter().map(Vec::as_slice).collect();
        for kind in LikelihoodKind::ALL {
            let a = score_input(kind, &x, &rows).unwrap();
            let b = score_input(kind, &x, &prow).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(a.var_ll >= 0.0 && a.mean_pred_var >= 0.0);
            prop_assert_eq!(a.waic, a.e_ll - a.var_ll);
        }
        let ts: Vec<Tensor> = samples.iter().map(|s| Tensor::vector(s.clone()).unwrap()).collect();
        let tp: Vec<Tensor> = permuted.iter().map(|s| Tensor::vector(s.clone()).unwrap()).collect();
        prop_assert_eq!(predictive_moments(&ts).unwrap(), predictive_moments(&tp).unwrap());
    }

    #[test]
    fn single_sample_degenerates(x in pixels(7), s in proptest::collection::vec(interior(), 7)) {
        for kind in LikelihoodKind::ALL {
            let r = score_input(kind, &x, &[&s]).unwrap();
            prop_assert_eq!(r.var_ll, 0.0);
            prop_assert_eq!(r.mean_pred_var, 0.0);
            prop_assert_eq!(r.waic, r.e_ll);
        }
    }

    #[test]
    fn idx_round_trip_on_arbitrary_fixtures(n in 1u32..5, r in 1u32..6, c in 1u32..6, seed in any::<u64>()) {
        let len = (n * r * c) as usize;
        let payload: Vec<u8> = (0..len).map(|i| (seed.wrapping_mul(i as u64 + 1) >> 13) as u8).collect();
        let mut bytes = Vec::new();
        for v in [0x0803u32, n, r, c] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        bytes.extend_from_slice(&payload);
        let d = read_idx(&mut Cursor::new(&bytes), "p", Split::Train, None).unwrap();
        prop_assert!(d.images().data().iter().all(|v| (0.0..=1.0).contains(v)));
        let mut out = Vec::new();
        write_idx(&mut out, &d).unwrap();
        prop_assert_eq!(out, bytes);
    }

    #[test]
    fn checkpoints_round_trip(input in 1usize..8, hidden in proptest::collection::vec(1usize..8, 0..2), latent in 1usize..8, seed in any::<u64>()) {
        let arch = AeArchitecture::autoencoder(input, &hidden, latent).unwrap();
        let m = init_params(&arch, seed).unwrap();
        let layers: Vec<_> = m.encoder().layers().iter().chain(m.decoder().layers()).collect();
        let mut buf = Vec::new();
        write_layers(&mut buf, &layers).unwrap();
        let back = read_layers(&mut Cursor::new(&buf)).unwrap();
        prop_assert_eq!(back.len(), layers.len());
        for (a, b) in back.iter().zip(layers) {
            prop_assert_eq!(a, b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_small_models_pass_the_gradient_check(
        input in 2usize..8,
        hidden in proptest::collection::vec(2usize..8, 0..2),
        latent in 1usize..5,
        seed in any::<u64>(),
        kind_idx in 0usize..3,
    ) {
        let kind = LikelihoodKind::ALL[kind_idx];
        let m = init_params(&AeArchitecture::autoencoder(input, &hidden, latent).unwrap(), seed).unwrap();
        let x = common::uniform_batch(3, input, seed ^ 0x55);
        let (_, g) = m.backward(&x, kind).unwrap();
        let p: Vec<Tensor> = m.params().cloned().collect();
        let n = numeric_gradient(&p, |q| m.with_params(q).unwrap().backward(&x, kind).unwrap().0);
        // a pre-activation sitting within one step of the leaky-ReLU kink
        // breaks central differences, not the analytic gradient
        let err = max_relative_error(g.tensors(), &n, REL_FLOOR);
        prop_assume!(err < 1e-2);
        prop_assert!(err < 1e-5, "relative error {:e}", err);
    }
}
