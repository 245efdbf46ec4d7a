//! Turning posterior reconstructions into OOD scores.
//!
//! For an input `x` and `T` posterior reconstructions `x̂_t`:
//!
//! * predictive mean / variance: per-pixel mean and population variance of `x̂_t`
//! * `E(LL)`, `Var(LL)`: mean and population variance of `LL(x, x̂_t)`
//! * `WAIC = E(LL) - Var(LL)`
//!
//! Scores are oriented so that higher means more out-of-distribution:
//! `-E(LL)`, `+Var(LL)`, `-WAIC` and `+mean_pixels(Var(x̂))`. The orientation is
//! never flipped, so a confounded score shows up as AUROC below 0.5.
//!
//! Moments are computed on sorted values, which makes every score exactly
//! invariant to the order of the posterior samples.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::inference::PosteriorSampler;
use crate::likelihood::{log_likelihood, LikelihoodKind};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreReport {
    pub e_ll: f64,
    pub var_ll: f64,
    pub waic: f64,
    pub mean_pred_var: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    ELl,
    VarLl,
    Waic,
    VarXhat,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::ELl, Method::VarLl, Method::Waic, Method::VarXhat];

    pub fn name(self) -> &'static str {
        match self {
            Method::ELl => "e_ll",
            Method::VarLl => "var_ll",
            Method::Waic => "waic",
            Method::VarXhat => "var_xhat",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scoring method '{s}'")))
    }
}

/// Per-method OOD scores; higher = more OOD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OodScores {
    pub e_ll: f64,
    pub var_ll: f64,
    pub waic: f64,
    pub var_xhat: f64,
}

impl OodScores {
    pub fn get(&self, method: Method) -> f64 {
        match method {
            Method::ELl => self.e_ll,
            Method::VarLl => self.var_ll,
            Method::Waic => self.waic,
            Method::VarXhat => self.var_xhat,
        }
    }
}

impl ScoreReport {
    pub fn new(e_ll: f64, var_ll: f64, mean_pred_var: f64) -> Self {
        Self {
            e_ll,
            var_ll,
            waic: waic(e_ll, var_ll),
            mean_pred_var,
        }
    }

    pub fn ood_scores(&self) -> OodScores {
        OodScores {
            e_ll: -self.e_ll,
            var_ll: self.var_ll,
            waic: -self.waic,
            var_xhat: self.mean_pred_var,
        }
    }

    /// The un-negated quantity behind each method.
    pub fn raw(&self, method: Method) -> f64 {
        match method {
            Method::ELl => self.e_ll,
            Method::VarLl => self.var_ll,
            Method::Waic => self.waic,
            Method::VarXhat => self.mean_pred_var,
        }
    }
}

#[inline]
pub fn waic(e_ll: f64, var_ll: f64) -> f64 {
    e_ll - var_ll
}

/// Mean and population variance of `values`, computed on a sorted copy.
pub(crate) fn sorted_moments(values: &mut [f64]) -> (f64, f64) {
    debug_assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let (first, last) = (values[0], values[values.len() - 1]);
    if first == last {
        return (first, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Element-wise predictive mean and population variance over samples.
pub fn predictive_moments(samples: &[Tensor]) -> Result<(Tensor, Tensor)> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Argument("no posterior samples".into()))?;
    if samples.iter().any(|s| !s.same_shape(first)) {
        return Err(Error::Dimension("posterior samples differ in shape".into()));
    }
    let mut mean = Tensor::zeros(first.shape());
    let mut var = Tensor::zeros(first.shape());
    let mut column = vec![0.0; samples.len()];
    for i in 0..first.len() {
        for (c, s) in column.iter_mut().zip(samples) {
            *c = s.data()[i];
        }
        let (m, v) = sorted_moments(&mut column);
        mean.data_mut()[i] = m;
        var.data_mut()[i] = v;
    }
    Ok((mean, var))
}

/// `(E(LL), Var(LL))` of one input over its posterior reconstructions.
pub fn ll_moments(kind: LikelihoodKind, x: &[f64], samples: &[&[f64]]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::Argument("no posterior samples".into()));
    }
    let mut lls = samples
        .iter()
        .map(|s| log_likelihood(kind, x, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(sorted_moments(&mut lls))
}

/// Full report for a single input.
pub fn score_input(kind: LikelihoodKind, x: &[f64], samples: &[&[f64]]) -> Result<ScoreReport> {
    let (e_ll, var_ll) = ll_moments(kind, x, samples)?;
    let d = x.len();
    let mut column = vec![0.0; samples.len()];
    let mut var_sum = 0.0;
    for i in 0..d {
        for (c, s) in column.iter_mut().zip(samples) {
            *c = s[i];
        }
        var_sum += sorted_moments(&mut column).1;
    }
    Ok(ScoreReport::new(e_ll, var_ll, var_sum / d as f64))
}

/// Scores every row of `x` given `T` reconstructions of the whole batch.
pub fn score_batch(
    kind: LikelihoodKind,
    x: &Tensor,
    samples: &[Tensor],
) -> Result<Vec<ScoreReport>> {
    if samples.is_empty() {
        return Err(Error::Argument("no posterior samples".into()));
    }
    if samples.iter().any(|s| !s.same_shape(x)) {
        return Err(Error::Dimension(format!(
            "reconstructions must match input shape {:?}",
            x.shape()
        )));
    }
    (0..x.rows())
        .map(|i| {
            let rows: Vec<&[f64]> = samples.iter().map(|s| s.row(i)).collect();
            score_input(kind, x.row(i), &rows)
        })
        .collect()
}

/// Inputs scored per posterior call; bounds memory at `T·chunk·D` values.
pub const SCORE_CHUNK: usize = 100;

/// Scores every image of `images` (`[N, D]`) with `t` posterior samples.
///
/// Chunk `k` draws its randomness from `sampler.seed() + k`, so the result
/// only depends on the sampler and the input order.
pub fn score_dataset(
    sampler: &PosteriorSampler,
    images: &Tensor,
    t: usize,
) -> Result<Vec<ScoreReport>> {
    let kind = sampler.likelihood();
    let mut out = Vec::with_capacity(images.rows());
    let rows: Vec<usize> = (0..images.rows()).collect();
    for (k, chunk) in rows.chunks(SCORE_CHUNK).enumerate() {
        let x = images.select_rows(chunk);
        let seed = sampler.seed().wrapping_add(k as u64);
        let samples = sampler.sample_predictions_seeded(&x, t, seed)?;
        out.extend(score_batch(kind, &x, &samples)?);
    }
    Ok(out)
}
