//! Sawtooth cyclic learning rate and an exponential learning-rate sweep.

use crate::error::{Error, Result};

/// Linear rise from `lr_min` towards `lr_max` over `period` steps, then an
/// instant reset.
pub fn cyclic_lr(step: usize, period: usize, lr_min: f64, lr_max: f64) -> f64 {
    let period = period.max(1);
    let phase = (step % period) as f64 / period as f64;
    lr_min + (lr_max - lr_min) * phase
}

pub const FINDER_START_LR: f64 = 1e-6;
pub const FINDER_END_LR: f64 = 1.0;
/// The sweep always takes at least this many steps, even on tiny datasets.
pub const FINDER_MIN_STEPS: usize = 100;
const FINDER_SMOOTHING: usize = 5;
const FINDER_BLOWUP: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LrSweep {
    /// Candidate learning rates, strictly increasing.
    pub lrs: Vec<f64>,
    /// Raw loss recorded at each evaluated candidate.
    pub losses: Vec<f64>,
    pub lr_min: f64,
    pub lr_max: f64,
}

/// Geometric grid from `start` to `end` inclusive.
pub fn lr_grid(start: f64, end: f64, steps: usize) -> Vec<f64> {
    let steps = steps.max(2);
    let ratio = (end / start).ln() / (steps - 1) as f64;
    (0..steps)
        .map(|i| start * (ratio * i as f64).exp())
        .collect()
}

/// Runs `step(lr)` for each learning rate of an exponential sweep and picks
/// `lr_max` where the centred moving average of the loss falls fastest;
/// `lr_min = lr_max / 10`.
///
/// `step` performs one optimisation step at `lr` and returns the loss
/// measured before the update. The sweep stops early once the loss exceeds
/// four times the best value seen or becomes non-finite.
pub fn find_lr(steps: usize, mut step: impl FnMut(f64) -> Result<f64>) -> Result<LrSweep> {
    let lrs = lr_grid(FINDER_START_LR, FINDER_END_LR, steps);
    let mut losses = Vec::with_capacity(lrs.len());
    let mut best = f64::INFINITY;
    for &lr in &lrs {
        let loss = match step(lr) {
            Ok(l) if l.is_finite() => l,
            Ok(_) | Err(Error::Numeric(_)) => break,
            Err(e) => return Err(e),
        };
        if loss > FINDER_BLOWUP * best && best > 0.0 {
            break;
        }
        best = best.min(loss);
        losses.push(loss);
    }
    if losses.len() < 3 {
        return Err(Error::FinderFailed(format!(
            "loss diverged after {} steps",
            losses.len()
        )));
    }
    let smooth = centred_average(&losses, FINDER_SMOOTHING);
    let (mut best_i, mut best_slope) = (0, 0.0);
    for i in 0..smooth.len() - 1 {
        let slope = smooth[i + 1] - smooth[i];
        if slope < best_slope {
            best_slope = slope;
            best_i = i;
        }
    }
    if best_slope >= 0.0 {
        return Err(Error::FinderFailed(
            "loss never decreased during the sweep".into(),
        ));
    }
    let lr_max = lrs[best_i];
    Ok(LrSweep {
        lrs: lrs[..losses.len()].to_vec(),
        losses,
        lr_min: lr_max / 10.0,
        lr_max,
    })
}

fn centred_average(v: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..v.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(v.len());
            v[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}
