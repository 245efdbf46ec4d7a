//! Per-input score CSV files.
//!
//! Reals are written with 17 significant digits (`{:.16e}`), which is enough
//! for every `f64` to survive a write/read cycle bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scoring::{OodScores, ScoreReport};

pub const SCORE_HEADER: &str = "label,e_ll,var_ll,waic,mean_pred_var,score_e_ll,score_var_ll,score_waic,score_var_xhat,proportion_zeros";

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub label: String,
    pub report: ScoreReport,
    pub ood: OodScores,
    pub proportion_zeros: f64,
}

impl ScoreRow {
    pub fn new(label: impl Into<String>, report: ScoreReport, proportion_zeros: f64) -> Self {
        Self {
            label: label.into(),
            ood: report.ood_scores(),
            report,
            proportion_zeros,
        }
    }
}

/// Formats a real with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render_scores_csv(rows: &[ScoreRow]) -> Result<String> {
    let mut out = String::with_capacity(64 + rows.len() * 220);
    out.push_str(SCORE_HEADER);
    out.push('\n');
    for row in rows {
        if row.label.contains([',', '\n', '\r', '"']) {
            return Err(Error::Argument(format!(
                "label '{}' contains a reserved character",
                row.label
            )));
        }
        let r = &row.report;
        let o = &row.ood;
        let fields = [
            r.e_ll,
            r.var_ll,
            r.waic,
            r.mean_pred_var,
            o.e_ll,
            o.var_ll,
            o.waic,
            o.var_xhat,
            row.proportion_zeros,
        ];
        out.push_str(&row.label);
        for v in fields {
            let _ = write!(out, ",{}", fmt_real(v));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_scores_csv(text: &str) -> Result<Vec<ScoreRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        None => return Ok(Vec::new()),
        Some((_, h)) if h.trim_end() == SCORE_HEADER => {}
        Some((_, h)) => {
            return Err(Error::parse(1, format!("unexpected header '{h}'")));
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 10 {
            return Err(Error::parse(
                line_no,
                format!("expected 10 columns, got {}", cols.len()),
            ));
        }
        let mut v = [0.0; 9];
        for (slot, raw) in v.iter_mut().zip(&cols[1..]) {
            *slot = raw
                .trim()
                .parse()
                .map_err(|_| Error::parse(line_no, format!("invalid number '{raw}'")))?;
        }
        rows.push(ScoreRow {
            label: cols[0].to_string(),
            report: ScoreReport {
                e_ll: v[0],
                var_ll: v[1],
                waic: v[2],
                mean_pred_var: v[3],
            },
            ood: OodScores {
                e_ll: v[4],
                var_ll: v[5],
                waic: v[6],
                var_xhat: v[7],
            },
            proportion_zeros: v[8],
        });
    }
    Ok(rows)
}

pub fn save_scores_csv(path: &Path, rows: &[ScoreRow]) -> Result<()> {
    let text = render_scores_csv(rows)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_scores_csv(path: &Path) -> Result<Vec<ScoreRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scores_csv(&text)
}
