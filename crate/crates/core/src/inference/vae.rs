//! Variational autoencoder with a diagonal Gaussian latent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::sampler::{Posterior, PosteriorSampler};
use super::trainer::{run_epochs, Trained};
use super::{check_data, derive_seed, Adam, Stream, TrainConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::likelihood::LikelihoodKind;
use crate::nn::{
    check_reconstruction_head, clamp_output, reconstruction_loss, Activation, AeArchitecture,
    Gradient, Layer, Mlp,
};
use crate::tensor::Tensor;

/// `½ Σ (μ² + e^{lv} − 1 − lv)`: KL of `N(μ, e^{lv})` from `N(0, 1)`.
pub fn latent_kl(mu: &[f64], logvar: &[f64]) -> f64 {
    0.5 * mu
        .iter()
        .zip(logvar)
        .map(|(&m, &lv)| m * m + lv.exp() - 1.0 - lv)
        .sum::<f64>()
}

/// The encoder emits `[μ_z, log σ_z²]`, `2·latent_dim` values per input.
#[derive(Debug, Clone, PartialEq)]
pub struct Vae {
    encoder: Mlp,
    decoder: Mlp,
}

impl Vae {
    pub fn new(encoder: Mlp, decoder: Mlp) -> Result<Self> {
        if encoder.out_dim() != 2 * decoder.in_dim() {
            return Err(Error::Dimension(format!(
                "encoder emits {} values for a {}-dimensional latent",
                encoder.out_dim(),
                decoder.in_dim()
            )));
        }
        check_reconstruction_head(&decoder, encoder.in_dim())?;
        Ok(Self { encoder, decoder })
    }

    pub fn architecture(
        input_dim: usize,
        hidden: &[usize],
        latent_dim: usize,
    ) -> Result<AeArchitecture> {
        AeArchitecture::fully_connected(
            input_dim,
            hidden,
            latent_dim,
            2 * latent_dim,
            Activation::Identity,
        )
    }

    pub fn init(input_dim: usize, hidden: &[usize], latent_dim: usize, seed: u64) -> Result<Self> {
        let arch = Self::architecture(input_dim, hidden, latent_dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = Mlp::init(&arch.encoder, &mut rng)?;
        let decoder = Mlp::init(&arch.decoder, &mut rng)?;
        Self::new(encoder, decoder)
    }

    pub fn from_layers(mut layers: Vec<Layer>, encoder_layers: usize) -> Result<Self> {
        if encoder_layers == 0 || encoder_layers >= layers.len() {
            return Err(Error::Format(format!(
                "cannot split {} layers with {encoder_layers} encoder layers",
                layers.len()
            )));
        }
        let decoder = layers.split_off(encoder_layers);
        Self::new(Mlp::new(layers)?, Mlp::new(decoder)?)
    }

    pub fn encoder(&self) -> &Mlp {
        &self.encoder
    }

    pub fn decoder(&self) -> &Mlp {
        &self.decoder
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.in_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.decoder.in_dim()
    }

    pub fn params(&self) -> impl Iterator<Item = &Tensor> {
        self.encoder.params().chain(self.decoder.params())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.encoder.params_mut().chain(self.decoder.params_mut())
    }

    pub fn with_params(&self, values: &[Tensor]) -> Result<Self> {
        let mut out = self.clone();
        let slots: Vec<&mut Tensor> = out.params_mut().collect();
        if slots.len() != values.len() || slots.iter().zip(values).any(|(s, v)| !s.same_shape(v)) {
            return Err(Error::Dimension(
                "parameter values do not match the VAE".into(),
            ));
        }
        for (slot, v) in slots.into_iter().zip(values) {
            *slot = v.clone();
        }
        Ok(out)
    }

    fn split(&self, h: &Tensor) -> (Tensor, Tensor) {
        let (b, l) = (h.rows(), self.latent_dim());
        let mut mu = Tensor::zeros(&[b, l]);
        let mut lv = Tensor::zeros(&[b, l]);
        for i in 0..b {
            mu.row_mut(i).copy_from_slice(&h.row(i)[..l]);
            lv.row_mut(i).copy_from_slice(&h.row(i)[l..]);
        }
        (mu, lv)
    }

    /// Latent mean and log-variance, each `[B, latent_dim]`.
    pub fn encode(&self, x: &Tensor) -> Result<(Tensor, Tensor)> {
        Ok(self.split(&self.encoder.forward(x)?))
    }

    pub fn decode(&self, z: &Tensor) -> Result<Tensor> {
        Ok(self.decoder.forward(z)?.map(clamp_output))
    }

    fn check_eps(&self, x: &Tensor, eps: &Tensor) -> Result<()> {
        if eps.shape() != [x.rows(), self.latent_dim()] {
            return Err(Error::Dimension(format!(
                "latent noise {:?} for batch of {}",
                eps.shape(),
                x.rows()
            )));
        }
        Ok(())
    }

    fn reparameterize(mu: &Tensor, lv: &Tensor, eps: &Tensor) -> Tensor {
        let mut z = mu.clone();
        for ((zv, &l), &e) in z.data_mut().iter_mut().zip(lv.data()).zip(eps.data()) {
            *zv += (0.5 * l).exp() * e;
        }
        z
    }

    /// Reconstruction through `z = μ + σ·ε`.
    pub fn reconstruct(&self, x: &Tensor, eps: &Tensor) -> Result<Tensor> {
        self.check_eps(x, eps)?;
        let (mu, lv) = self.encode(x)?;
        self.decode(&Self::reparameterize(&mu, &lv, eps))
    }

    pub fn draw_eps<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Tensor {
        let mut t = Tensor::zeros(&[batch, self.latent_dim()]);
        t.data_mut()
            .iter_mut()
            .for_each(|v| *v = rng.sample(StandardNormal));
        t
    }

    /// `mean_b [NLL_b + kl_weight · KL_b / D]` with `NLL_b` the per-pixel
    /// mean, and its exact gradient for fixed `eps`.
    pub fn objective(
        &self,
        x: &Tensor,
        kind: LikelihoodKind,
        eps: &Tensor,
        kl_weight: f64,
    ) -> Result<(f64, Gradient)> {
        self.check_eps(x, eps)?;
        let enc = self.encoder.forward_trace(x, None)?;
        let (mu, lv) = self.split(enc.output());
        let z = Self::reparameterize(&mu, &lv, eps);
        let dec = self.decoder.forward_trace(&z, None)?;
        let (nll, d_out) = reconstruction_loss(kind, x, dec.output())?;
        let (b, l) = (x.rows(), self.latent_dim());
        let kl_scale = kl_weight / (b * x.cols()) as f64;
        let kl: f64 = (0..b).map(|i| latent_kl(mu.row(i), lv.row(i))).sum();

        let mut enc_grads = self.encoder.zero_grads();
        let mut dec_grads = self.decoder.zero_grads();
        let dz = self
            .decoder
            .backward(&dec, &d_out, &mut dec_grads, true)
            .expect("input gradient requested");
        let mut dh = Tensor::zeros(&[b, 2 * l]);
        for i in 0..b {
            let (m, v, e, d) = (mu.row(i), lv.row(i), eps.row(i), dz.row(i));
            let row = dh.row_mut(i);
            for k in 0..l {
                let s = (0.5 * v[k]).exp();
                row[k] = d[k] + kl_scale * m[k];
                row[l + k] = d[k] * 0.5 * s * e[k] + kl_scale * 0.5 * (v[k].exp() - 1.0);
            }
        }
        self.encoder.backward(&enc, &dh, &mut enc_grads, false);
        enc_grads.extend(dec_grads);
        let loss = nll + kl_scale * kl;
        if !loss.is_finite() {
            return Err(Error::Numeric("non-finite VAE loss".into()));
        }
        Ok((loss, Gradient::new(enc_grads)))
    }
}

pub fn train_vae(cfg: &TrainConfig, data: &Dataset) -> Result<Trained> {
    cfg.validate()?;
    check_data(data)?;
    let mut vae = Vae::init(data.pixels(), &cfg.hidden, cfg.latent_dim, cfg.seed)?;
    let mut opt = Adam::new(vae.params());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, Stream::Noise, 0));
    let log = run_epochs(cfg, data.images(), cfg.seed, |x, lr| {
        let eps = vae.draw_eps(x.rows(), &mut rng);
        let (loss, grad) = vae.objective(x, cfg.likelihood, &eps, cfg.reg_scale)?;
        opt.step(vae.params_mut(), grad.tensors(), lr);
        Ok(loss)
    })?;
    Ok(Trained {
        sampler: PosteriorSampler::new(Posterior::Vae(vae), cfg.likelihood, cfg.seed),
        logs: vec![log],
    })
}
