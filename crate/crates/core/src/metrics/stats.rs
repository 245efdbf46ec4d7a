use crate::error::{Error, Result};

/// Pixels at or below one 8-bit intensity step count as zero.
pub const ZERO_THRESHOLD: f64 = 1.0 / 255.0;

/// Fraction of pixels whose value is `<= 1/255`.
pub fn proportion_zeros(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    // 1e-12 slack so that byte value 1 (stored as 1/255) always counts
    let zeros = x.iter().filter(|&&v| v <= ZERO_THRESHOLD + 1e-12).count();
    zeros as f64 / x.len() as f64
}

/// Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Argument("need at least two points".into()));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate(
            "zero variance input to Pearson correlation".into(),
        ));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count_in: usize,
    pub count_out: usize,
}

/// Shared-edge histogram of both score sets over their pooled range.
pub fn histogram(scores_ood: &[f64], scores_in: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::Argument("histogram needs at least one bin".into()));
    }
    let (lo, hi) = scores_ood
        .iter()
        .chain(scores_in)
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    if !lo.is_finite() {
        return Err(Error::Argument("no finite scores to histogram".into()));
    }
    let bins = if hi > lo { bins } else { 1 };
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            left: lo + i as f64 * width,
            // last edge pinned to the max so rounding never drops it
            right: if i + 1 == bins && hi > lo {
                hi
            } else {
                lo + (i + 1) as f64 * width
            },
            count_in: 0,
            count_out: 0,
        })
        .collect();
    let index = |v: f64| (((v - lo) / width) as usize).min(bins - 1);
    for &v in scores_in.iter().filter(|v| v.is_finite()) {
        out[index(v)].count_in += 1;
    }
    for &v in scores_ood.iter().filter(|v| v.is_finite()) {
        out[index(v)].count_out += 1;
    }
    Ok(out)
}
