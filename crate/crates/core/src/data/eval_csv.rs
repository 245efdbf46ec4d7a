//! Evaluation CSV files: detection metrics, score/zero-fraction correlations
//! and score histograms, keyed by scoring method.

use std::fmt::Write as _;
use std::path::Path;

use super::scores_csv::fmt_real;
use crate::error::{Error, Result};
use crate::metrics::{EvalResult, HistogramBin};
use crate::scoring::Method;

pub const EVAL_HEADER: &str = "method,auroc,auprc,fpr80,n_in,n_out";
pub const PCC_HEADER: &str = "method,pcc";
pub const HISTOGRAM_HEADER: &str = "method,bin_left,bin_right,count_in,count_out";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRow {
    pub method: Method,
    pub result: EvalResult,
}

/// Correlation of a method's raw quantity with the zero-pixel fraction.
/// `None` when the quantity is constant over the inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PccRow {
    pub method: Method,
    pub pcc: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramRow {
    pub method: Method,
    pub bin: HistogramBin,
}

pub fn render_eval_csv(rows: &[EvalRow]) -> String {
    let mut out = format!("{EVAL_HEADER}\n");
    for r in rows {
        let e = &r.result;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.method,
            fmt_real(e.auroc),
            fmt_real(e.auprc),
            fmt_real(e.fpr80),
            e.n_in,
            e.n_out
        );
    }
    out
}

pub fn render_pcc_csv(rows: &[PccRow]) -> String {
    let mut out = format!("{PCC_HEADER}\n");
    for r in rows {
        let v = r.pcc.map(fmt_real).unwrap_or_default();
        let _ = writeln!(out, "{},{v}", r.method);
    }
    out
}

pub fn render_histogram_csv(rows: &[HistogramRow]) -> String {
    let mut out = format!("{HISTOGRAM_HEADER}\n");
    for r in rows {
        let b = &r.bin;
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.method,
            fmt_real(b.left),
            fmt_real(b.right),
            b.count_in,
            b.count_out
        );
    }
    out
}

/// Splits `text` into checked data rows of `width` columns, skipping blanks.
fn records<'a>(text: &'a str, header: &str, width: usize) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        None => return Ok(Vec::new()),
        Some((_, h)) if h.trim_end() == header => {}
        Some((_, h)) => return Err(Error::parse(1, format!("unexpected header '{h}'"))),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let cols: Vec<&str> = l.trim_end().split(',').collect();
            if cols.len() != width {
                return Err(Error::parse(
                    i + 1,
                    format!("expected {width} columns, got {}", cols.len()),
                ));
            }
            Ok((i + 1, cols))
        })
        .collect()
}

fn field<T: std::str::FromStr>(line: usize, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid value '{raw}'")))
}

pub fn parse_eval_csv(text: &str) -> Result<Vec<EvalRow>> {
    records(text, EVAL_HEADER, 6)?
        .into_iter()
        .map(|(line, c)| {
            Ok(EvalRow {
                method: field(line, c[0])?,
                result: EvalResult {
                    auroc: field(line, c[1])?,
                    auprc: field(line, c[2])?,
                    fpr80: field(line, c[3])?,
                    n_in: field(line, c[4])?,
                    n_out: field(line, c[5])?,
                },
            })
        })
        .collect()
}

pub fn parse_pcc_csv(text: &str) -> Result<Vec<PccRow>> {
    records(text, PCC_HEADER, 2)?
        .into_iter()
        .map(|(line, c)| {
            let pcc = if c[1].trim().is_empty() {
                None
            } else {
                Some(field(line, c[1])?)
            };
            Ok(PccRow {
                method: field(line, c[0])?,
                pcc,
            })
        })
        .collect()
}

pub fn parse_histogram_csv(text: &str) -> Result<Vec<HistogramRow>> {
    records(text, HISTOGRAM_HEADER, 5)?
        .into_iter()
        .map(|(line, c)| {
            Ok(HistogramRow {
                method: field(line, c[0])?,
                bin: HistogramBin {
                    left: field(line, c[1])?,
                    right: field(line, c[2])?,
                    count_in: field(line, c[3])?,
                    count_out: field(line, c[4])?,
                },
            })
        })
        .collect()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
