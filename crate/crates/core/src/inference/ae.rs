//! Point-estimate families: deterministic MAP, anchored ensembles and
//! MC-Dropout. All three minimise `NLL + (λ/N)·‖w − anchor‖²`; the
//! deterministic and dropout models use the zero anchor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::sampler::{Posterior, PosteriorSampler};
use super::trainer::{run_epochs, TrainLog, Trained};
use super::{check_data, derive_seed, Adam, Stream, TrainConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::likelihood::LikelihoodKind;
use crate::nn::{init_params, AeMasks, AeModel, Gradient, LayerMasks, Mlp};
use crate::tensor::Tensor;

pub const DEFAULT_P_DROP: f64 = 0.2;

/// Frozen anchor values, one tensor per model parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    tensors: Vec<Tensor>,
}

impl AnchorSet {
    /// All-zero anchors: the penalty becomes plain weight decay.
    pub fn zeros(model: &AeModel) -> Self {
        Self {
            tensors: model.params().map(|p| Tensor::zeros(p.shape())).collect(),
        }
    }

    /// Anchors equal to the model's current parameters.
    pub fn at(model: &AeModel) -> Self {
        Self {
            tensors: model.params().cloned().collect(),
        }
    }

    /// Draws weights and biases from `N(0, 1/fan_in)` of their layer.
    pub fn draw(model: &AeModel, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, Stream::Anchor, 0));
        let layers = model
            .encoder()
            .layers()
            .iter()
            .chain(model.decoder().layers());
        let mut tensors = Vec::new();
        for layer in layers {
            let normal = Normal::new(0.0, (1.0 / layer.in_dim() as f64).sqrt())
                .expect("positive standard deviation");
            for p in [layer.weights(), layer.bias()] {
                let mut t = Tensor::zeros(p.shape());
                t.data_mut()
                    .iter_mut()
                    .for_each(|v| *v = normal.sample(&mut rng));
                tensors.push(t);
            }
        }
        Self { tensors }
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    fn check(&self, model: &AeModel) -> Result<()> {
        let ok = self.tensors.len() == model.params().count()
            && self
                .tensors
                .iter()
                .zip(model.params())
                .all(|(a, p)| a.same_shape(p));
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension(
                "anchor set does not match the model".into(),
            ))
        }
    }

    /// `reg · ‖w − anchor‖²`.
    pub fn penalty(&self, model: &AeModel, reg: f64) -> Result<f64> {
        self.check(model)?;
        let sq: f64 = model
            .params()
            .zip(&self.tensors)
            .flat_map(|(p, a)| p.data().iter().zip(a.data()))
            .map(|(w, a)| (w - a) * (w - a))
            .sum();
        Ok(reg * sq)
    }
}

/// Mean NLL of `x` plus `reg · ‖w − anchor‖²`, and the exact gradient.
/// `reg` is λ/N. With `masks`, the NLL uses those dropout masks.
pub fn ae_objective(
    model: &AeModel,
    x: &Tensor,
    kind: LikelihoodKind,
    anchors: &AnchorSet,
    reg: f64,
    masks: Option<&AeMasks>,
) -> Result<(f64, Gradient)> {
    let penalty = anchors.penalty(model, reg)?;
    let (nll, mut grad) = model.loss_and_grad(x, kind, masks)?;
    for ((g, p), a) in grad
        .tensors_mut()
        .iter_mut()
        .zip(model.params())
        .zip(&anchors.tensors)
    {
        for ((gv, &w), &av) in g.data_mut().iter_mut().zip(p.data()).zip(a.data()) {
            *gv += 2.0 * reg * (w - av);
        }
    }
    Ok((nll + penalty, grad))
}

fn layer_masks<R: Rng + ?Sized>(
    mlp: &Mlp,
    batch: usize,
    p_drop: f64,
    skip_last: bool,
    rng: &mut R,
) -> LayerMasks {
    let keep_scale = 1.0 / (1.0 - p_drop);
    let n = mlp.layers().len();
    mlp.layers()
        .iter()
        .enumerate()
        .map(|(i, layer)| {
            if skip_last && i + 1 == n {
                return None;
            }
            let mut m = Tensor::zeros(&[batch, layer.out_dim()]);
            for v in m.data_mut() {
                if !rng.random_bool(p_drop) {
                    *v = keep_scale;
                }
            }
            Some(m)
        })
        .collect()
}

/// Inverted-dropout masks on every layer output except the reconstruction.
pub fn draw_dropout_masks<R: Rng + ?Sized>(
    model: &AeModel,
    batch: usize,
    p_drop: f64,
    rng: &mut R,
) -> AeMasks {
    AeMasks {
        encoder: layer_masks(model.encoder(), batch, p_drop, false, rng),
        decoder: layer_masks(model.decoder(), batch, p_drop, true, rng),
    }
}

pub(crate) fn check_p_drop(p_drop: f64) -> Result<()> {
    if p_drop > 0.0 && p_drop < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "dropout rate {p_drop} outside (0, 1)"
        )))
    }
}

fn train_member(
    cfg: &TrainConfig,
    data: &Dataset,
    seed: u64,
    anchored: bool,
    p_drop: Option<f64>,
) -> Result<(AeModel, TrainLog)> {
    let arch = cfg.architecture(data.pixels())?;
    let mut model = init_params(&arch, seed)?;
    let anchors = if anchored {
        AnchorSet::draw(&model, seed)
    } else {
        AnchorSet::zeros(&model)
    };
    let reg = cfg.reg_scale / data.len() as f64;
    let mut opt = Adam::new(model.params());
    let mut mask_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, Stream::Dropout, 0));
    let log = run_epochs(cfg, data.images(), seed, |x, lr| {
        let masks = p_drop.map(|p| draw_dropout_masks(&model, x.rows(), p, &mut mask_rng));
        let (loss, grad) = ae_objective(&model, x, cfg.likelihood, &anchors, reg, masks.as_ref())?;
        opt.step(model.params_mut(), grad.tensors(), lr);
        Ok(loss)
    })?;
    Ok((model, log))
}

/// Single MAP autoencoder with weight decay `(λ/N)·‖w‖²`.
pub fn train_deterministic(cfg: &TrainConfig, data: &Dataset) -> Result<Trained> {
    cfg.validate()?;
    check_data(data)?;
    let (model, log) = train_member(cfg, data, cfg.seed, false, None)?;
    Ok(Trained {
        sampler: PosteriorSampler::new(Posterior::Deterministic(model), cfg.likelihood, cfg.seed),
        logs: vec![log],
    })
}

/// `members` autoencoders, member `j` seeded with `seed + j` and pulled
/// towards its own frozen anchors. Members train in parallel.
pub fn train_anchored_ensemble(
    cfg: &TrainConfig,
    data: &Dataset,
    members: usize,
) -> Result<Trained> {
    cfg.validate()?;
    check_data(data)?;
    if members < 2 {
        return Err(Error::Config(format!(
            "ensemble needs at least 2 members, got {members}"
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(if cfg.workers == 0 {
            members
        } else {
            cfg.workers
        })
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<(AeModel, TrainLog)>> = pool.install(|| {
        (0..members as u64)
            .into_par_iter()
            .map(|j| train_member(cfg, data, cfg.seed.wrapping_add(j), true, None))
            .collect()
    });
    let (models, logs): (Vec<_>, Vec<_>) = results
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    Ok(Trained {
        sampler: PosteriorSampler::new(
            Posterior::AnchoredEnsemble(models),
            cfg.likelihood,
            cfg.seed,
        ),
        logs,
    })
}

/// One weight set trained and sampled with fresh dropout masks.
pub fn train_mc_dropout(cfg: &TrainConfig, data: &Dataset, p_drop: f64) -> Result<Trained> {
    cfg.validate()?;
    check_p_drop(p_drop)?;
    check_data(data)?;
    let (model, log) = train_member(cfg, data, cfg.seed, false, Some(p_drop))?;
    Ok(Trained {
        sampler: PosteriorSampler::new(
            Posterior::McDropout { model, p_drop },
            cfg.likelihood,
            cfg.seed,
        ),
        logs: vec![log],
    })
}
