//! Small synthetic image sets that reproduce the zero-proportion contrast
//! between digit-like and clothing-like images.
//!
//! * `ZeroHeavy`: bright random-walk strokes on an exactly-zero background.
//!   Each image's zero fraction is drawn uniformly within
//!   `±ZERO_FRACTION_SPREAD` of the target and never drops below 0.6.
//! * `MidGray`: a smooth sum of Gaussian blobs rescaled into `[0.2, 0.8]`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Split};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const ZERO_FRACTION_SPREAD: f64 = 0.1;
const MIN_ZERO_FRACTION: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    ZeroHeavy,
    MidGray,
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyntheticKind::ZeroHeavy => "zero_heavy",
            SyntheticKind::MidGray => "mid_gray",
        })
    }
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero_heavy" | "zeroheavy" => Ok(SyntheticKind::ZeroHeavy),
            "mid_gray" | "midgray" => Ok(SyntheticKind::MidGray),
            other => Err(Error::Config(format!("unknown synthetic kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub n: usize,
    pub side: usize,
    /// Target mean zero fraction (ZeroHeavy only).
    pub zero_fraction: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, n: usize, side: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            side,
            zero_fraction: 0.8,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("synthetic dataset needs n >= 1".into()));
        }
        if self.side < 4 {
            return Err(Error::Config("synthetic images need side >= 4".into()));
        }
        if !(MIN_ZERO_FRACTION..1.0).contains(&self.zero_fraction) {
            return Err(Error::Config(format!(
                "zero_fraction {} outside [{MIN_ZERO_FRACTION}, 1)",
                self.zero_fraction
            )));
        }
        Ok(())
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.side * spec.side;
    let mut pixels = Vec::with_capacity(spec.n * d);
    for _ in 0..spec.n {
        match spec.kind {
            SyntheticKind::ZeroHeavy => zero_heavy(spec, &mut rng, &mut pixels),
            SyntheticKind::MidGray => mid_gray(spec.side, &mut rng, &mut pixels),
        }
    }
    Dataset::new(
        spec.kind.to_string(),
        Tensor::new(vec![spec.n, d], pixels)?,
        spec.side,
        spec.side,
        Split::Test,
    )
}

fn zero_heavy(spec: &SyntheticSpec, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
    let side = spec.side as i64;
    let d = spec.side * spec.side;
    let lo = (spec.zero_fraction - ZERO_FRACTION_SPREAD).max(MIN_ZERO_FRACTION);
    let hi = (spec.zero_fraction + ZERO_FRACTION_SPREAD).min(1.0 - 1.0 / d as f64);
    let zf = if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    };
    let lit_target = (((1.0 - zf) * d as f64).round() as usize)
        .clamp(1, d - (MIN_ZERO_FRACTION * d as f64).ceil() as usize);

    let mut img = vec![0.0; d];
    let mut lit = 0;
    while lit < lit_target {
        let (mut r, mut c) = (rng.random_range(0..side), rng.random_range(0..side));
        let (mut dr, mut dc) = random_direction(rng);
        let len = rng.random_range(4..12);
        for _ in 0..len {
            let idx = (r * side + c) as usize;
            if img[idx] == 0.0 {
                img[idx] = rng.random_range(0.6..=1.0);
                lit += 1;
                if lit == lit_target {
                    break;
                }
            }
            if rng.random_bool(0.25) {
                (dr, dc) = random_direction(rng);
            }
            r = (r + dr).clamp(0, side - 1);
            c = (c + dc).clamp(0, side - 1);
        }
    }
    out.extend(img);
}

fn random_direction(rng: &mut ChaCha8Rng) -> (i64, i64) {
    loop {
        let d = (rng.random_range(-1..=1), rng.random_range(-1..=1));
        if d != (0, 0) {
            return d;
        }
    }
}

fn mid_gray(side: usize, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
    let s = side as f64;
    let blobs: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(0.0..s),
                rng.random_range(0.0..s),
                rng.random_range(s / 6.0..s / 3.0),
                rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    let field: Vec<f64> = (0..side * side)
        .map(|i| {
            let (y, x) = ((i / side) as f64, (i % side) as f64);
            blobs
                .iter()
                .map(|&(cy, cx, w, a)| {
                    let r2 = (y - cy).powi(2) + (x - cx).powi(2);
                    a * (-r2 / (2.0 * w * w)).exp()
                })
                .sum()
        })
        .collect();
    let (min, max) = field
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = max - min;
    out.extend(field.into_iter().map(|v| {
        if span > 1e-12 {
            0.2 + 0.6 * (v - min) / span
        } else {
            0.5
        }
    }));
}
