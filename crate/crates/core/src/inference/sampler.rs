use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::ae::draw_dropout_masks;
use super::{derive_seed, Stream, Vae, VariationalParams};
use crate::error::{Error, Result};
use crate::likelihood::LikelihoodKind;
use crate::nn::AeModel;
use crate::tensor::Tensor;

pub const DEFAULT_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Deterministic,
    Vae,
    McDropout,
    BayesByBackprop,
    AnchoredEnsemble,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Deterministic,
        Family::Vae,
        Family::McDropout,
        Family::BayesByBackprop,
        Family::AnchoredEnsemble,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Deterministic => "deterministic",
            Family::Vae => "vae",
            Family::McDropout => "mc_dropout",
            Family::BayesByBackprop => "bayes_by_backprop",
            Family::AnchoredEnsemble => "anchored_ensemble",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "deterministic" | "ae" => Ok(Family::Deterministic),
            "vae" => Ok(Family::Vae),
            "mc_dropout" | "dropout" | "mcdropout" => Ok(Family::McDropout),
            "bayes_by_backprop" | "bbb" => Ok(Family::BayesByBackprop),
            "anchored_ensemble" | "ensemble" => Ok(Family::AnchoredEnsemble),
            other => Err(Error::Config(format!("unknown model family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Posterior {
    Deterministic(AeModel),
    Vae(Vae),
    McDropout { model: AeModel, p_drop: f64 },
    BayesByBackprop(VariationalParams),
    AnchoredEnsemble(Vec<AeModel>),
}

impl Posterior {
    pub fn family(&self) -> Family {
        match self {
            Posterior::Deterministic(_) => Family::Deterministic,
            Posterior::Vae(_) => Family::Vae,
            Posterior::McDropout { .. } => Family::McDropout,
            Posterior::BayesByBackprop(_) => Family::BayesByBackprop,
            Posterior::AnchoredEnsemble(_) => Family::AnchoredEnsemble,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Posterior::Deterministic(m) | Posterior::McDropout { model: m, .. } => m.input_dim(),
            Posterior::Vae(v) => v.input_dim(),
            Posterior::BayesByBackprop(q) => q.mean().input_dim(),
            Posterior::AnchoredEnsemble(ms) => ms[0].input_dim(),
        }
    }
}

/// A trained posterior that turns inputs into `T` reconstructions.
///
/// All randomness comes from the sampler seed, so repeated calls with the
/// same seed return identical samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSampler {
    posterior: Posterior,
    likelihood: LikelihoodKind,
    samples: usize,
    seed: u64,
}

impl PosteriorSampler {
    pub fn new(posterior: Posterior, likelihood: LikelihoodKind, seed: u64) -> Self {
        let samples = match &posterior {
            Posterior::AnchoredEnsemble(ms) => ms.len(),
            _ => DEFAULT_SAMPLES,
        };
        Self {
            posterior,
            likelihood,
            samples,
            seed,
        }
    }

    pub fn posterior(&self) -> &Posterior {
        &self.posterior
    }

    pub fn family(&self) -> Family {
        self.posterior.family()
    }

    pub fn likelihood(&self) -> LikelihoodKind {
        self.likelihood
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Default number of samples drawn by [`PosteriorSampler::sample_predictions`].
    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Sets the default sample count; ensembles always keep `M`.
    pub fn with_samples(mut self, t: usize) -> Result<Self> {
        check_t(t)?;
        if !matches!(self.posterior, Posterior::AnchoredEnsemble(_)) {
            self.samples = t;
        }
        Ok(self)
    }

    /// Number of samples actually produced for a request of `t`.
    pub fn effective_samples(&self, t: usize) -> usize {
        match &self.posterior {
            Posterior::AnchoredEnsemble(ms) => ms.len(),
            _ => t,
        }
    }

    pub fn sample_predictions(&self, x: &Tensor, t: usize) -> Result<Vec<Tensor>> {
        self.sample_predictions_seeded(x, t, self.seed)
    }

    /// `t` reconstructions of `x`, each in `(0, 1)`. Sample `i` draws its
    /// noise from a stream derived from `(seed, i)`.
    pub fn sample_predictions_seeded(
        &self,
        x: &Tensor,
        t: usize,
        seed: u64,
    ) -> Result<Vec<Tensor>> {
        check_t(t)?;
        if x.shape().len() != 2 || x.cols() != self.posterior.input_dim() {
            return Err(Error::Dimension(format!(
                "expected [batch, {}] input, got {:?}",
                self.posterior.input_dim(),
                x.shape()
            )));
        }
        let rng = |i: usize| ChaCha8Rng::seed_from_u64(derive_seed(seed, Stream::Sample, i as u64));
        match &self.posterior {
            Posterior::Deterministic(m) => {
                let out = m.forward(x)?;
                Ok(vec![out; t])
            }
            Posterior::AnchoredEnsemble(ms) => ms.par_iter().map(|m| m.forward(x)).collect(),
            Posterior::McDropout { model, p_drop } => (0..t)
                .into_par_iter()
                .map(|i| {
                    let masks = draw_dropout_masks(model, x.rows(), *p_drop, &mut rng(i));
                    model.forward_masked(x, &masks)
                })
                .collect(),
            Posterior::BayesByBackprop(q) => (0..t)
                .into_par_iter()
                .map(|i| q.sample(&q.draw_eps(&mut rng(i)))?.forward(x))
                .collect(),
            Posterior::Vae(v) => (0..t)
                .into_par_iter()
                .map(|i| v.reconstruct(x, &v.draw_eps(x.rows(), &mut rng(i))))
                .collect(),
        }
    }
}

fn check_t(t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::Config("sample count T must be at least 1".into()));
    }
    Ok(())
}
