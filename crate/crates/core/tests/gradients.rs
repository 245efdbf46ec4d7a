mod common;

use bae_core::inference::{ae_objective, draw_dropout_masks, AnchorSet, Vae, VariationalParams};
use bae_core::nn::{init_params, AeArchitecture};
use bae_core::{AeModel, LikelihoodKind, Tensor};
use common::{max_relative_error, numeric_gradient, rng, uniform_batch};

const TOL: f64 = 1e-5;
/// Denominator floor for partials that are numerically zero.
const FLOOR: f64 = 1e-6;
const REG: f64 = 0.05;

fn model_636(seed: u64) -> AeModel {
    init_params(&AeArchitecture::autoencoder(6, &[], 3).unwrap(), seed).unwrap()
}

fn batch() -> Tensor {
    let mut x = uniform_batch(4, 6, 99);
    x.data_mut()[0] = 0.0;
    x.data_mut()[7] = 1.0;
    x
}

fn params(m: &AeModel) -> Vec<Tensor> {
    m.params().cloned().collect()
}

fn check_ae(kind: LikelihoodKind, anchors: impl Fn(&AeModel) -> AnchorSet, dropout: bool) -> f64 {
    let model = model_636(5);
    let x = batch();
    let anchors = anchors(&model);
    let masks = dropout.then(|| draw_dropout_masks(&model, x.rows(), 0.3, &mut rng(8)));
    let (_, g) = ae_objective(&model, &x, kind, &anchors, REG, masks.as_ref()).unwrap();
    let numeric = numeric_gradient(&params(&model), |p| {
        let m = model.with_params(p).unwrap();
        ae_objective(&m, &x, kind, &anchors, REG, masks.as_ref())
            .unwrap()
            .0
    });
    max_relative_error(g.tensors(), &numeric, FLOOR)
}

#[test]
fn deterministic_objective_matches_finite_differences() {
    for kind in LikelihoodKind::ALL {
        let err = check_ae(kind, AnchorSet::zeros, false);
        assert!(err < TOL, "{kind}: relative error {err:e}");
    }
}

#[test]
fn anchored_objective_matches_finite_differences() {
    for kind in LikelihoodKind::ALL {
        let err = check_ae(kind, |m| AnchorSet::draw(m, 21), false);
        assert!(err < TOL, "{kind}: relative error {err:e}");
    }
}

#[test]
fn dropout_objective_matches_finite_differences() {
    for kind in LikelihoodKind::ALL {
        let err = check_ae(kind, AnchorSet::zeros, true);
        assert!(err < TOL, "{kind}: relative error {err:e}");
    }
}

#[test]
fn bayes_by_backprop_objective_matches_finite_differences() {
    for kind in LikelihoodKind::ALL {
        let mean = model_636(6);
        let mut r = rng(4);
        let rho: Vec<Tensor> = mean
            .params()
            .map(|p| {
                let mut t = Tensor::zeros(p.shape());
                t.data_mut()
                    .iter_mut()
                    .for_each(|v| *v = rand::Rng::random_range(&mut r, -4.0..-1.0));
                t
            })
            .collect();
        let q = VariationalParams::from_parts(mean.clone(), rho.clone()).unwrap();
        let eps = q.draw_eps(&mut rng(12));
        let x = batch();
        let (_, g_mu, g_rho) = q.objective(&x, kind, &eps, REG).unwrap();
        let n_mu = rho.len();
        let mut all = params(&mean);
        all.extend(rho);
        let numeric = numeric_gradient(&all, |p| {
            let q = VariationalParams::from_parts(
                mean.with_params(&p[..n_mu]).unwrap(),
                p[n_mu..].to_vec(),
            )
            .unwrap();
            q.objective(&x, kind, &eps, REG).unwrap().0
        });
        let mut analytic = g_mu;
        analytic.extend(g_rho);
        let err = max_relative_error(&analytic, &numeric, FLOOR);
        assert!(err < TOL, "{kind}: relative error {err:e}");
    }
}

#[test]
fn vae_objective_matches_finite_differences() {
    for kind in LikelihoodKind::ALL {
        let vae = Vae::init(6, &[], 3, 7).unwrap();
        let x = batch();
        let eps = vae.draw_eps(x.rows(), &mut rng(13));
        let (_, g) = vae.objective(&x, kind, &eps, 2.0).unwrap();
        let p: Vec<Tensor> = vae.params().cloned().collect();
        let numeric = numeric_gradient(&p, |p| {
            vae.with_params(p)
                .unwrap()
                .objective(&x, kind, &eps, 2.0)
                .unwrap()
                .0
        });
        let err = max_relative_error(g.tensors(), &numeric, FLOOR);
        assert!(err < TOL, "{kind}: relative error {err:e}");
    }
}

#[test]
fn gradient_vanishes_at_a_perfect_gaussian_reconstruction() {
    // Zero weights give x̂ = sigmoid(0) = 0.5 everywhere; x = 0.5 is then a
    // stationary point of the Gaussian loss.
    let model = model_636(0);
    let zeros: Vec<Tensor> = model.params().map(|p| Tensor::zeros(p.shape())).collect();
    let model = model.with_params(&zeros).unwrap();
    let x = Tensor::full(&[3, 6], 0.5);
    let (loss, g) = model.backward(&x, LikelihoodKind::GaussianUnit).unwrap();
    assert_eq!(loss, 0.0);
    assert_eq!(g.max_abs(), 0.0);
}

#[test]
fn duplicating_the_batch_leaves_loss_and_gradient_unchanged() {
    let model = model_636(3);
    let x = batch();
    let rows: Vec<usize> = (0..x.rows()).chain(0..x.rows()).collect();
    let doubled = x.select_rows(&rows);
    for kind in LikelihoodKind::ALL {
        let (l1, g1) = model.backward(&x, kind).unwrap();
        let (l2, g2) = model.backward(&doubled, kind).unwrap();
        assert!((l1 - l2).abs() <= 1e-14 * l1.abs().max(1.0), "{kind}");
        for (a, b) in g1.tensors().iter().zip(g2.tensors()) {
            for (u, v) in a.data().iter().zip(b.data()) {
                assert!((u - v).abs() <= 1e-14 * u.abs().max(1e-3), "{kind}");
            }
        }
    }
}

#[test]
fn gradients_are_bit_identical_across_calls() {
    let model = model_636(9);
    let x = batch();
    let a = model
        .backward(&x, LikelihoodKind::ContinuousBernoulli)
        .unwrap();
    let b = model
        .backward(&x, LikelihoodKind::ContinuousBernoulli)
        .unwrap();
    assert_eq!(a.0.to_bits(), b.0.to_bits());
    assert_eq!(a.1, b.1);
}
