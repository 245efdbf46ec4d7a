//! Image similarity: negative BCE, negative MSE, SSIM and normalised mutual
//! information.

use crate::error::{Error, Result};
use crate::likelihood::bernoulli_ll;
use crate::nn::clamp_output;

/// Side of the uniform SSIM window.
pub const SSIM_WINDOW: usize = 7;
/// Intensity bins per axis of the NMI joint histogram.
pub const NMI_BINS: usize = 32;

const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

#[derive(Debug, Clone, Copy)]
pub struct ImageView<'a> {
    data: &'a [f64],
    height: usize,
    width: usize,
}

impl<'a> ImageView<'a> {
    pub fn new(data: &'a [f64], height: usize, width: usize) -> Result<Self> {
        if height * width != data.len() || data.is_empty() {
            return Err(Error::Dimension(format!(
                "{} pixels do not form a {height}x{width} image",
                data.len()
            )));
        }
        Ok(Self {
            data,
            height,
            width,
        })
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }
}

fn same_dims(a: &ImageView<'_>, b: &ImageView<'_>) -> Result<()> {
    if (a.height, a.width) != (b.height, b.width) {
        return Err(Error::Dimension(format!(
            "{}x{} vs {}x{}",
            a.height, a.width, b.height, b.width
        )));
    }
    Ok(())
}

/// Mean SSIM over every fully-contained 7×7 window (dynamic range 1,
/// population statistics within the window).
pub fn ssim(a: &ImageView<'_>, b: &ImageView<'_>) -> Result<f64> {
    same_dims(a, b)?;
    if a.height < SSIM_WINDOW || a.width < SSIM_WINDOW {
        return Err(Error::Argument(format!(
            "{SSIM_WINDOW}x{SSIM_WINDOW} window larger than {}x{} image",
            a.height, a.width
        )));
    }
    let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for r0 in 0..=a.height - SSIM_WINDOW {
        for c0 in 0..=a.width - SSIM_WINDOW {
            let (mut sa, mut sb) = (0.0, 0.0);
            for r in r0..r0 + SSIM_WINDOW {
                for c in c0..c0 + SSIM_WINDOW {
                    sa += a.at(r, c);
                    sb += b.at(r, c);
                }
            }
            let (ma, mb) = (sa / n, sb / n);
            let (mut vaa, mut vbb, mut vab) = (0.0, 0.0, 0.0);
            for r in r0..r0 + SSIM_WINDOW {
                for c in c0..c0 + SSIM_WINDOW {
                    let (da, db) = (a.at(r, c) - ma, b.at(r, c) - mb);
                    vaa += da * da;
                    vbb += db * db;
                    vab += da * db;
                }
            }
            let (vaa, vbb, vab) = (vaa / n, vbb / n, vab / n);
            total += ((2.0 * ma * mb + SSIM_C1) * (2.0 * vab + SSIM_C2))
                / ((ma * ma + mb * mb + SSIM_C1) * (vaa + vbb + SSIM_C2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

fn bin(v: f64) -> usize {
    ((v * NMI_BINS as f64).floor().max(0.0) as usize).min(NMI_BINS - 1)
}

fn entropy(counts: &[usize], total: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// `2 I(X;Y) / (H(X) + H(Y))` from a 32×32 joint intensity histogram.
pub fn nmi(a: &ImageView<'_>, b: &ImageView<'_>) -> Result<f64> {
    same_dims(a, b)?;
    let mut joint = vec![0usize; NMI_BINS * NMI_BINS];
    let mut ha = vec![0usize; NMI_BINS];
    let mut hb = vec![0usize; NMI_BINS];
    for (&x, &y) in a.data.iter().zip(b.data) {
        let (i, j) = (bin(x), bin(y));
        joint[i * NMI_BINS + j] += 1;
        ha[i] += 1;
        hb[j] += 1;
    }
    let total = a.data.len() as f64;
    let (ea, eb) = (entropy(&ha, total), entropy(&hb, total));
    if ea == 0.0 || eb == 0.0 {
        return Err(Error::Degenerate(
            "constant image has zero intensity entropy".into(),
        ));
    }
    let mi = ea + eb - entropy(&joint, total);
    Ok((2.0 * mi / (ea + eb)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityScores {
    pub neg_bce: f64,
    pub neg_mse: f64,
    pub ssim: f64,
    /// `None` when either image has zero intensity entropy.
    pub nmi: Option<f64>,
}

/// All four similarity measures between a reference `x` and an image `y`.
/// `y` is clamped to the open unit interval before the BCE term.
pub fn similarity(x: &ImageView<'_>, y: &ImageView<'_>) -> Result<SimilarityScores> {
    same_dims(x, y)?;
    let clamped: Vec<f64> = y.data.iter().map(|&v| clamp_output(v)).collect();
    let neg_bce = bernoulli_ll(x.data, &clamped)?;
    let neg_mse = -x
        .data
        .iter()
        .zip(y.data)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / x.data.len() as f64;
    let nmi = match nmi(x, y) {
        Ok(v) => Some(v),
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(SimilarityScores {
        neg_bce,
        neg_mse,
        ssim: ssim(x, y)?,
        nmi,
    })
}
