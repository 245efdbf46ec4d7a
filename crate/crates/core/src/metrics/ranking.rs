//! AUROC, AUPRC and FPR at a fixed TPR. OOD inputs are the positive class and
//! a higher score means "more OOD".

use std::cmp::Ordering;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub auroc: f64,
    pub auprc: f64,
    pub fpr80: f64,
    pub n_in: usize,
    pub n_out: usize,
}

fn check(scores_ood: &[f64], scores_in: &[f64]) -> Result<()> {
    if scores_ood.is_empty() || scores_in.is_empty() {
        return Err(Error::Argument("both score lists must be non-empty".into()));
    }
    if scores_ood.iter().chain(scores_in).any(|s| s.is_nan()) {
        return Err(Error::Argument("scores contain NaN".into()));
    }
    Ok(())
}

/// Pooled `(score, is_ood)` pairs sorted by descending score.
fn pooled_desc(scores_ood: &[f64], scores_in: &[f64]) -> Vec<(f64, bool)> {
    let mut all: Vec<(f64, bool)> = scores_ood
        .iter()
        .map(|&s| (s, true))
        .chain(scores_in.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    all
}

/// `(tp, fp)` after each group of tied scores, walking thresholds downwards.
fn operating_points(scores_ood: &[f64], scores_in: &[f64]) -> Vec<(usize, usize)> {
    let all = pooled_desc(scores_ood, scores_in);
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    for (i, &(s, pos)) in all.iter().enumerate() {
        if pos {
            tp += 1;
        } else {
            fp += 1;
        }
        if i + 1 == all.len() || all[i + 1].0 != s {
            points.push((tp, fp));
        }
    }
    points
}

/// `P(s_out > s_in) + P(s_out == s_in) / 2` from the Mann–Whitney rank sum
/// with mid-ranks for ties.
pub fn auroc(scores_ood: &[f64], scores_in: &[f64]) -> Result<f64> {
    check(scores_ood, scores_in)?;
    let mut all: Vec<(f64, bool)> = scores_ood
        .iter()
        .map(|&s| (s, true))
        .chain(scores_in.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));

    // Twice the rank sum keeps mid-ranks integral.
    let mut rank_sum_x2: u64 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1 ..= j+1, mid-rank (i + j + 2) / 2
        let mid_x2 = (i + j + 2) as u64;
        let positives = all[i..=j].iter().filter(|p| p.1).count() as u64;
        rank_sum_x2 += mid_x2 * positives;
        i = j + 1;
    }
    let n_out = scores_ood.len() as u64;
    let n_in = scores_in.len() as u64;
    let u_x2 = rank_sum_x2 - n_out * (n_out + 1);
    Ok(u_x2 as f64 / 2.0 / (n_out * n_in) as f64)
}

/// Area under the precision-recall curve with step interpolation
/// (average precision over all distinct thresholds).
pub fn auprc(scores_ood: &[f64], scores_in: &[f64]) -> Result<f64> {
    check(scores_ood, scores_in)?;
    let n_pos = scores_ood.len() as f64;
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    for (tp, fp) in operating_points(scores_ood, scores_in) {
        let recall = tp as f64 / n_pos;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(area)
}

/// Smallest false-positive rate among thresholds reaching `tpr_target`.
pub fn fpr_at_tpr(scores_ood: &[f64], scores_in: &[f64], tpr_target: f64) -> Result<f64> {
    check(scores_ood, scores_in)?;
    if !(tpr_target > 0.0 && tpr_target <= 1.0) {
        return Err(Error::Argument(format!(
            "tpr target {tpr_target} outside (0, 1]"
        )));
    }
    let n_pos = scores_ood.len();
    let n_neg = scores_in.len() as f64;
    // tp / n_pos >= target, compared in integers to avoid rounding at 0.8·n
    let needed = (tpr_target * n_pos as f64 - 1e-9).ceil().max(1.0) as usize;
    operating_points(scores_ood, scores_in)
        .into_iter()
        .find(|&(tp, _)| tp >= needed)
        .map(|(_, fp)| fp as f64 / n_neg)
        .ok_or_else(|| Error::Argument("target TPR unreachable".into()))
}

pub fn evaluate(scores_ood: &[f64], scores_in: &[f64]) -> Result<EvalResult> {
    Ok(EvalResult {
        auroc: auroc(scores_ood, scores_in)?,
        auprc: auprc(scores_ood, scores_in)?,
        fpr80: fpr_at_tpr(scores_ood, scores_in, 0.8)?,
        n_in: scores_in.len(),
        n_out: scores_ood.len(),
    })
}
