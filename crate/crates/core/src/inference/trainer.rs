use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::schedule::{cyclic_lr, find_lr, FINDER_MIN_STEPS};
use super::{check_data, derive_seed, Adam, AnchorSet, Stream, TrainConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::init_params;
use crate::tensor::Tensor;

/// Mean training loss of every epoch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub epoch_losses: Vec<f64>,
}

impl TrainLog {
    pub fn final_loss(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }
}

/// A trained posterior with one loss history per trained network.
#[derive(Debug, Clone)]
pub struct Trained {
    pub sampler: super::PosteriorSampler,
    pub logs: Vec<TrainLog>,
}

/// Shuffled mini-batch loop with the sawtooth schedule.
///
/// `step(batch, lr)` updates the caller's parameters and returns the batch
/// loss measured before the update.
pub(crate) fn run_epochs(
    cfg: &TrainConfig,
    images: &Tensor,
    seed: u64,
    mut step: impl FnMut(&Tensor, f64) -> Result<f64>,
) -> Result<TrainLog> {
    let n = images.rows();
    let steps_per_epoch = cfg.steps_per_epoch(n);
    let period = cfg.cycle_epochs * steps_per_epoch;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, Stream::Shuffle, 0));
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = TrainLog::default();
    let mut global = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            let x = images.select_rows(idx);
            let lr = cyclic_lr(global, period, cfg.lr_min, cfg.lr_max);
            let loss = match step(&x, lr) {
                Ok(l) if l.is_finite() => l,
                Ok(l) => {
                    return Err(Error::Diverged {
                        step: global,
                        loss: l,
                    })
                }
                Err(Error::Numeric(_)) => {
                    return Err(Error::Diverged {
                        step: global,
                        loss: f64::NAN,
                    })
                }
                Err(e) => return Err(e),
            };
            total += loss * idx.len() as f64;
            global += 1;
        }
        log.epoch_losses.push(total / n as f64);
    }
    Ok(log)
}

/// Exponential learning-rate sweep on a freshly initialised deterministic
/// autoencoder. Takes one epoch of batches, or at least
/// [`FINDER_MIN_STEPS`] steps, cycling through the data as needed.
pub fn lr_finder(cfg: &TrainConfig, data: &Dataset) -> Result<(f64, f64)> {
    check_data(data)?;
    let arch = cfg.architecture(data.pixels())?;
    let mut model = init_params(&arch, cfg.seed)?;
    let anchors = AnchorSet::zeros(&model);
    let reg = cfg.reg_scale / data.len() as f64;
    let mut opt = Adam::new(model.params());
    let images = data.images();
    let n = images.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, Stream::Shuffle, 0));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let steps = cfg.steps_per_epoch(n).max(FINDER_MIN_STEPS);
    let mut cursor = 0usize;
    let sweep = find_lr(steps, |lr| {
        let idx: Vec<usize> = (0..cfg.batch_size.min(n))
            .map(|k| order[(cursor + k) % n])
            .collect();
        cursor = (cursor + idx.len()) % n;
        let x = images.select_rows(&idx);
        let (loss, grad) = super::ae_objective(&model, &x, cfg.likelihood, &anchors, reg, None)?;
        opt.step(model.params_mut(), grad.tensors(), lr);
        Ok(loss)
    })?;
    Ok((sweep.lr_min, sweep.lr_max))
}
