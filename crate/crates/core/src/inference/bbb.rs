//! Bayes by Backprop: a factorised Gaussian over every weight and bias.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::sampler::{Posterior, PosteriorSampler};
use super::trainer::{run_epochs, Trained};
use super::{check_data, derive_seed, Adam, Stream, TrainConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::likelihood::LikelihoodKind;
use crate::nn::{init_params, sigmoid, AeModel};
use crate::tensor::Tensor;

/// Initial pre-variance; `softplus(-6) ≈ 2.5e-3`.
pub const DEFAULT_RHO: f64 = -6.0;

fn softplus(r: f64) -> f64 {
    if r > 30.0 {
        r
    } else {
        r.exp().ln_1p()
    }
}

/// `KL(N(mu, sigma²) ‖ N(0, prior_sigma²))` for one scalar weight.
pub fn gaussian_kl(mu: f64, sigma: f64, prior_sigma: f64) -> f64 {
    (prior_sigma / sigma).ln() + (sigma * sigma + mu * mu) / (2.0 * prior_sigma * prior_sigma) - 0.5
}

/// Means live in an [`AeModel`] so sampled weights reuse its forward pass;
/// `rho` follows the same canonical tensor order.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalParams {
    mu: AeModel,
    rho: Vec<Tensor>,
    prior_var: Vec<f64>,
}

impl VariationalParams {
    pub fn new(mu: AeModel, rho0: f64) -> Self {
        let rho = mu.params().map(|p| Tensor::full(p.shape(), rho0)).collect();
        Self::from_parts(mu, rho).expect("rho built from the model")
    }

    pub fn from_parts(mu: AeModel, rho: Vec<Tensor>) -> Result<Self> {
        let congruent = rho.len() == mu.params().count()
            && rho.iter().zip(mu.params()).all(|(r, p)| r.same_shape(p));
        if !congruent {
            return Err(Error::Dimension("rho does not match the mean model".into()));
        }
        if rho.iter().any(|r| !r.is_finite()) {
            return Err(Error::Numeric("non-finite rho".into()));
        }
        let prior_var = mu
            .encoder()
            .layers()
            .iter()
            .chain(mu.decoder().layers())
            .flat_map(|l| {
                let v = 1.0 / l.in_dim() as f64;
                [v, v]
            })
            .collect();
        Ok(Self { mu, rho, prior_var })
    }

    pub fn mean(&self) -> &AeModel {
        &self.mu
    }

    pub fn rho(&self) -> &[Tensor] {
        &self.rho
    }

    /// `σ = softplus(ρ)`, strictly positive.
    pub fn sigma(&self) -> Vec<Tensor> {
        self.rho.iter().map(|r| r.map(softplus)).collect()
    }

    /// Prior variance of each parameter tensor (`1 / fan_in` of its layer).
    pub fn prior_vars(&self) -> &[f64] {
        &self.prior_var
    }

    pub fn draw_eps<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Tensor> {
        self.rho
            .iter()
            .map(|r| {
                let mut t = Tensor::zeros(r.shape());
                t.data_mut()
                    .iter_mut()
                    .for_each(|v| *v = rng.sample(StandardNormal));
                t
            })
            .collect()
    }

    /// Weights `μ + σ·ε`.
    pub fn sample(&self, eps: &[Tensor]) -> Result<AeModel> {
        if eps.len() != self.rho.len() || eps.iter().zip(&self.rho).any(|(e, r)| !e.same_shape(r)) {
            return Err(Error::Dimension(
                "noise does not match the parameters".into(),
            ));
        }
        let values: Vec<Tensor> = self
            .mu
            .params()
            .zip(&self.rho)
            .zip(eps)
            .map(|((m, r), e)| {
                let mut w = m.clone();
                for ((wv, &rv), &ev) in w.data_mut().iter_mut().zip(r.data()).zip(e.data()) {
                    *wv += softplus(rv) * ev;
                }
                w
            })
            .collect();
        self.mu.with_params(&values)
    }

    /// Summed KL divergence from the prior over every parameter.
    pub fn kl(&self) -> f64 {
        self.mu
            .params()
            .zip(&self.rho)
            .zip(&self.prior_var)
            .map(|((m, r), &pv)| {
                let ps = pv.sqrt();
                m.data()
                    .iter()
                    .zip(r.data())
                    .map(|(&mv, &rv)| gaussian_kl(mv, softplus(rv), ps))
                    .sum::<f64>()
            })
            .sum()
    }

    /// `NLL(x; μ + σ·ε) + kl_weight · KL(q‖p)` and its gradients with respect
    /// to `μ` and `ρ`. Training uses `kl_weight = λ/N`.
    pub fn objective(
        &self,
        x: &Tensor,
        kind: LikelihoodKind,
        eps: &[Tensor],
        kl_weight: f64,
    ) -> Result<(f64, Vec<Tensor>, Vec<Tensor>)> {
        let model = self.sample(eps)?;
        let (nll, g) = model.loss_and_grad(x, kind, None)?;
        let mut g_mu = g.into_tensors();
        let mut g_rho = Vec::with_capacity(g_mu.len());
        for (((gm, (m, r)), e), &pv) in g_mu
            .iter_mut()
            .zip(self.mu.params().zip(&self.rho))
            .zip(eps)
            .zip(&self.prior_var)
        {
            let mut gr = Tensor::zeros(r.shape());
            for ((((gmv, grv), &mv), &rv), &ev) in gm
                .data_mut()
                .iter_mut()
                .zip(gr.data_mut())
                .zip(m.data())
                .zip(r.data())
                .zip(e.data())
            {
                let s = softplus(rv);
                let g_w = *gmv;
                *gmv = g_w + kl_weight * mv / pv;
                *grv = (g_w * ev + kl_weight * (-1.0 / s + s / pv)) * sigmoid(rv);
            }
            g_rho.push(gr);
        }
        Ok((nll + kl_weight * self.kl(), g_mu, g_rho))
    }
}

pub fn train_bayes_by_backprop(cfg: &TrainConfig, data: &Dataset) -> Result<Trained> {
    cfg.validate()?;
    check_data(data)?;
    let arch = cfg.architecture(data.pixels())?;
    let mut q = VariationalParams::new(init_params(&arch, cfg.seed)?, DEFAULT_RHO);
    let kl_weight = cfg.reg_scale / data.len() as f64;
    let mut opt = Adam::new(q.mu.params().chain(q.rho.iter()));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, Stream::Noise, 0));
    let log = run_epochs(cfg, data.images(), cfg.seed, |x, lr| {
        let eps = q.draw_eps(&mut rng);
        let (loss, mut g_mu, g_rho) = q.objective(x, cfg.likelihood, &eps, kl_weight)?;
        g_mu.extend(g_rho);
        let VariationalParams { mu, rho, .. } = &mut q;
        opt.step(mu.params_mut().chain(rho.iter_mut()), &g_mu, lr);
        Ok(loss)
    })?;
    Ok(Trained {
        sampler: PosteriorSampler::new(Posterior::BayesByBackprop(q), cfg.likelihood, cfg.seed),
        logs: vec![log],
    })
}
