//! Threshold-free OOD evaluation, confounding statistics and image
//! similarity measures.

mod ranking;
mod similarity;
mod stats;

pub use ranking::{auprc, auroc, evaluate, fpr_at_tpr, EvalResult};
pub use similarity::{nmi, similarity, ssim, ImageView, SimilarityScores, NMI_BINS, SSIM_WINDOW};
pub use stats::{histogram, pearson, proportion_zeros, HistogramBin, ZERO_THRESHOLD};
