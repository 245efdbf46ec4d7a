//! Training of the five posterior families and uniform posterior sampling.

mod ae;
mod bbb;
mod optim;
mod persist;
mod sampler;
mod schedule;
mod trainer;
mod vae;

pub use ae::{
    ae_objective, draw_dropout_masks, train_anchored_ensemble, train_deterministic,
    train_mc_dropout, AnchorSet, DEFAULT_P_DROP,
};
pub use bbb::{gaussian_kl, train_bayes_by_backprop, VariationalParams, DEFAULT_RHO};
pub use optim::Adam;
pub use persist::{load_sampler, save_sampler, MANIFEST_FILE};
pub use sampler::{Family, Posterior, PosteriorSampler, DEFAULT_SAMPLES};
pub use schedule::{
    cyclic_lr, find_lr, lr_grid, LrSweep, FINDER_END_LR, FINDER_MIN_STEPS, FINDER_START_LR,
};
pub use trainer::{lr_finder, TrainLog, Trained};
pub use vae::{latent_kl, train_vae, Vae};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::likelihood::LikelihoodKind;
use crate::nn::AeArchitecture;

/// Regularisation scales swept by `--sweep`.
pub const REG_SCALE_SWEEP: [f64; 6] = [10.0, 2.0, 1.0, 0.1, 0.01, 0.001];

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// λ: weight of the prior / KL term.
    pub reg_scale: f64,
    pub likelihood: LikelihoodKind,
    pub seed: u64,
    pub lr_min: f64,
    pub lr_max: f64,
    /// Length of one sawtooth cycle, in epochs.
    pub cycle_epochs: usize,
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
    /// Threads used for ensemble members; 0 means one per member.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 100,
            reg_scale: 0.01,
            likelihood: LikelihoodKind::Bernoulli,
            seed: 0,
            lr_min: 1e-4,
            lr_max: 3e-3,
            cycle_epochs: 10,
            hidden: vec![128],
            latent_dim: 20,
            workers: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.cycle_epochs == 0 {
            return Err(Error::Config(
                "epochs, batch_size and cycle_epochs must be at least 1".into(),
            ));
        }
        if !(self.reg_scale >= 0.0 && self.reg_scale.is_finite()) {
            return Err(Error::Config(format!(
                "reg_scale must be finite and non-negative, got {}",
                self.reg_scale
            )));
        }
        if !(self.lr_min > 0.0 && self.lr_min <= self.lr_max && self.lr_max.is_finite()) {
            return Err(Error::Config(format!(
                "need 0 < lr_min <= lr_max, got {} and {}",
                self.lr_min, self.lr_max
            )));
        }
        if self.latent_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        Ok(())
    }

    pub fn architecture(&self, input_dim: usize) -> Result<AeArchitecture> {
        AeArchitecture::autoencoder(input_dim, &self.hidden, self.latent_dim)
    }

    pub(crate) fn steps_per_epoch(&self, n: usize) -> usize {
        n.div_ceil(self.batch_size)
    }
}

pub(crate) fn check_data(data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Argument(format!("dataset '{}' is empty", data.name)));
    }
    Ok(())
}

/// Independent RNG streams derived from one user seed.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    Shuffle = 1,
    Anchor = 2,
    Dropout = 3,
    Noise = 4,
    Sample = 5,
}

/// SplitMix64 finaliser applied to `seed` mixed with a stream tag.
pub(crate) fn derive_seed(seed: u64, stream: Stream, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add((stream as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
