//! Datasets: IDX ingestion, synthetic generators, CSV score and evaluation
//! files and flat `key=value` configuration files.

mod eval_csv;
mod idx;
pub mod kv;
mod scores_csv;
mod synthetic;

pub use eval_csv::{
    parse_eval_csv, parse_histogram_csv, parse_pcc_csv, read_text, render_eval_csv,
    render_histogram_csv, render_pcc_csv, write_text, EvalRow, HistogramRow, PccRow, EVAL_HEADER,
    HISTOGRAM_HEADER, PCC_HEADER,
};
pub use idx::{load_idx, read_idx, write_idx, IDX_IMAGE_MAGIC};
pub use kv::KvFile;
pub use scores_csv::{
    fmt_real as format_real, load_scores_csv, parse_scores_csv, render_scores_csv, save_scores_csv,
    ScoreRow, SCORE_HEADER,
};
pub use synthetic::{generate_synthetic, SyntheticKind, SyntheticSpec};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split '{other}'"))),
        }
    }
}

/// Grayscale images flattened to `[N, height·width]`, pixels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    images: Tensor,
    height: usize,
    width: usize,
    pub split: Split,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        images: Tensor,
        height: usize,
        width: usize,
        split: Split,
    ) -> Result<Self> {
        if images.shape().len() != 2 || images.cols() != height * width {
            return Err(Error::Dimension(format!(
                "images {:?} do not hold {height}x{width} pixels per row",
                images.shape()
            )));
        }
        if let Some(v) = images.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Format(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(Self {
            name: name.into(),
            images,
            height,
            width,
            split,
        })
    }

    pub fn images(&self) -> &Tensor {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.images.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn image(&self, i: usize) -> &[f64] {
        self.images.row(i)
    }

    /// First `n` images (or all of them when `n` exceeds the size).
    pub fn take(&self, n: usize) -> Self {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        Self {
            name: self.name.clone(),
            images: self.images.select_rows(&idx),
            height: self.height,
            width: self.width,
            split: self.split,
        }
    }
}
