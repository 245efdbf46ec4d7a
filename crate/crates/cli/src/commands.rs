use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bae_core::data::{
    format_real, load_scores_csv, render_eval_csv, render_histogram_csv, render_pcc_csv,
    save_scores_csv, write_text, EvalRow, HistogramRow, KvFile, PccRow, ScoreRow,
};
use bae_core::inference::{
    load_sampler, lr_finder, save_sampler, train_anchored_ensemble, train_bayes_by_backprop,
    train_deterministic, train_mc_dropout, train_vae, REG_SCALE_SWEEP,
};
use bae_core::likelihood::max_ll_curve;
use bae_core::metrics::{
    evaluate, histogram, pearson, proportion_zeros, similarity, ImageView, NMI_BINS, SSIM_WINDOW,
    ZERO_THRESHOLD,
};
use bae_core::scoring::{predictive_moments, score_dataset, SCORE_CHUNK};
use bae_core::{Dataset, Error, Family, LikelihoodKind, Method, Result, Split, Trained};

use crate::config::{DataSource, ExperimentConfig};

pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const EVAL_FILE: &str = "eval.csv";
pub const PCC_FILE: &str = "pcc.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const EVAL_META_FILE: &str = "eval_meta.txt";

fn sweep_dir(out: &Path, reg: f64) -> PathBuf {
    out.join(format!("lambda_{reg}"))
}

/// Trains one model (or all six regularisation strengths with `sweep`) and
/// writes checkpoints plus a loss log under `out`. Returns the directories.
pub fn train(cfg: &ExperimentConfig, out: &Path, sweep: bool) -> Result<Vec<PathBuf>> {
    let data = cfg.data.load(Split::Train)?;
    if sweep {
        REG_SCALE_SWEEP
            .iter()
            .map(|&reg| {
                let mut c = cfg.clone();
                c.train.reg_scale = reg;
                let dir = sweep_dir(out, reg);
                train_one(&c, &data, &dir)?;
                Ok(dir)
            })
            .collect()
    } else {
        train_one(cfg, &data, out)?;
        Ok(vec![out.to_path_buf()])
    }
}

fn train_one(cfg: &ExperimentConfig, data: &Dataset, dir: &Path) -> Result<()> {
    let mut c = cfg.clone();
    if c.lr_find {
        let (lo, hi) = lr_finder(&c.train, data)?;
        c.train.lr_min = lo;
        c.train.lr_max = hi;
    }
    let tc = &c.train;
    let trained = match c.family {
        Family::Deterministic => train_deterministic(tc, data)?,
        Family::AnchoredEnsemble => train_anchored_ensemble(tc, data, c.members)?,
        Family::McDropout => train_mc_dropout(tc, data, c.p_drop)?,
        Family::BayesByBackprop => train_bayes_by_backprop(tc, data)?,
        Family::Vae => train_vae(tc, data)?,
    };
    let sampler = trained.sampler.clone().with_samples(c.samples)?;
    save_sampler(
        dir,
        &sampler,
        &c.manifest_extra(data.height(), data.width()),
    )?;
    write_text(&dir.join(TRAIN_LOG_FILE), &render_train_log(&trained))
}

fn render_train_log(t: &Trained) -> String {
    let mut out = String::from("member,epoch,loss\n");
    for (m, log) in t.logs.iter().enumerate() {
        for (e, loss) in log.epoch_losses.iter().enumerate() {
            let _ = writeln!(out, "{m},{},{}", e + 1, format_real(*loss));
        }
    }
    out
}

pub struct ScoreArgs<'a> {
    pub checkpoint: &'a Path,
    pub data: &'a DataSource,
    pub label: Option<&'a str>,
    pub samples: Option<usize>,
    pub likelihood: Option<LikelihoodKind>,
    pub seed: Option<u64>,
    pub out: &'a Path,
}

/// Scores every test input and writes one CSV row per input.
pub fn score(a: &ScoreArgs<'_>) -> Result<usize> {
    let (mut sampler, _) = load_sampler(a.checkpoint)?;
    if let Some(kind) = a.likelihood {
        if kind != sampler.likelihood() {
            return Err(Error::Config(format!(
                "checkpoint was trained with the {} likelihood, not {kind}",
                sampler.likelihood()
            )));
        }
    }
    if let Some(seed) = a.seed {
        sampler = sampler.with_seed(seed);
    }
    let data = a.data.load(Split::Test)?;
    check_width(&data, sampler.posterior().input_dim())?;
    let t = a.samples.unwrap_or(sampler.samples());
    let reports = score_dataset(&sampler, data.images(), t)?;
    let label = a.label.unwrap_or(&data.name);
    let rows: Vec<ScoreRow> = reports
        .into_iter()
        .enumerate()
        .map(|(i, r)| ScoreRow::new(label, r, proportion_zeros(data.image(i))))
        .collect();
    save_scores_csv(a.out, &rows)?;
    Ok(rows.len())
}

fn check_width(data: &Dataset, input_dim: usize) -> Result<()> {
    if data.pixels() != input_dim {
        return Err(Error::Dimension(format!(
            "dataset has {} pixels per image but the model expects {input_dim}",
            data.pixels()
        )));
    }
    Ok(())
}

/// Compares in-distribution and OOD score files; writes eval, correlation
/// and histogram CSVs plus a metadata file into `out_dir`.
pub fn eval(in_csv: &Path, ood_csv: &Path, out_dir: &Path, bins: usize) -> Result<Vec<EvalRow>> {
    let inl = load_scores_csv(in_csv)?;
    let ood = load_scores_csv(ood_csv)?;
    if inl.is_empty() || ood.is_empty() {
        return Err(Error::Argument(
            "both score files need at least one row".into(),
        ));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.into(),
        source: e,
    })?;

    let col = |rows: &[ScoreRow], m: Method| rows.iter().map(|r| r.ood.get(m)).collect::<Vec<_>>();
    let mut eval_rows = Vec::new();
    let mut hist_rows = Vec::new();
    let mut pcc_rows = Vec::new();
    let pooled: Vec<&ScoreRow> = inl.iter().chain(&ood).collect();
    let zeros: Vec<f64> = pooled.iter().map(|r| r.proportion_zeros).collect();
    for m in Method::ALL {
        let (s_in, s_ood) = (col(&inl, m), col(&ood, m));
        eval_rows.push(EvalRow {
            method: m,
            result: evaluate(&s_ood, &s_in)?,
        });
        for bin in histogram(&s_ood, &s_in, bins)? {
            hist_rows.push(HistogramRow { method: m, bin });
        }
        let raw: Vec<f64> = pooled.iter().map(|r| r.report.raw(m)).collect();
        let pcc = match pearson(&raw, &zeros) {
            Ok(r) => Some(r),
            Err(Error::Degenerate(_)) => None,
            Err(e) => return Err(e),
        };
        pcc_rows.push(PccRow { method: m, pcc });
    }
    write_text(&out_dir.join(EVAL_FILE), &render_eval_csv(&eval_rows))?;
    write_text(&out_dir.join(PCC_FILE), &render_pcc_csv(&pcc_rows))?;
    write_text(
        &out_dir.join(HISTOGRAM_FILE),
        &render_histogram_csv(&hist_rows),
    )?;
    let mut meta = KvFile::new();
    meta.set("in_scores", in_csv.display());
    meta.set("ood_scores", ood_csv.display());
    meta.set("histogram_bins", bins);
    meta.set("zero_threshold", format_real(ZERO_THRESHOLD));
    meta.set("positive_class", "ood");
    meta.save(&out_dir.join(EVAL_META_FILE))?;
    Ok(eval_rows)
}

pub const LIKELIHOOD_CURVE_HEADER: &str = "x,max_ll_bernoulli,max_ll_cb,max_ll_gaussian";

/// Maximum attainable log-likelihood of each kind on a uniform grid over [0, 1].
pub fn analyze_likelihood(grid_size: usize) -> Result<String> {
    if grid_size < 2 {
        return Err(Error::Argument(format!("grid size {grid_size} below 2")));
    }
    let grid: Vec<f64> = (0..grid_size)
        .map(|i| i as f64 / (grid_size - 1) as f64)
        .collect();
    let ber = max_ll_curve(LikelihoodKind::Bernoulli, &grid)?;
    let cb = max_ll_curve(LikelihoodKind::ContinuousBernoulli, &grid)?;
    let gau = max_ll_curve(LikelihoodKind::GaussianUnit, &grid)?;
    let mut out = format!("{LIKELIHOOD_CURVE_HEADER}\n");
    for i in 0..grid_size {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            format_real(grid[i]),
            format_real(ber[i].1),
            format_real(cb[i].1),
            format_real(gau[i].1)
        );
    }
    Ok(out)
}

pub const SIMILARITY_HEADER: &str = "index,neg_bce,neg_mse,ssim,nmi";

/// Similarity between each input and its mean posterior reconstruction.
pub fn similarity_report(
    checkpoint: &Path,
    data: &DataSource,
    samples: Option<usize>,
    limit: Option<usize>,
) -> Result<String> {
    let (sampler, _) = load_sampler(checkpoint)?;
    let mut data = data.load(Split::Test)?;
    if let Some(n) = limit {
        data = data.take(n);
    }
    check_width(&data, sampler.posterior().input_dim())?;
    let t = samples.unwrap_or(sampler.samples());
    let (h, w) = (data.height(), data.width());
    let mut out = format!("{SIMILARITY_HEADER}\n");
    let rows: Vec<usize> = (0..data.len()).collect();
    for (k, chunk) in rows.chunks(SCORE_CHUNK).enumerate() {
        let x = data.images().select_rows(chunk);
        let preds =
            sampler.sample_predictions_seeded(&x, t, sampler.seed().wrapping_add(k as u64))?;
        let (mean, _) = predictive_moments(&preds)?;
        for (r, &i) in chunk.iter().enumerate() {
            let s = similarity(
                &ImageView::new(x.row(r), h, w)?,
                &ImageView::new(mean.row(r), h, w)?,
            )?;
            let _ = writeln!(
                out,
                "{i},{},{},{},{}",
                format_real(s.neg_bce),
                format_real(s.neg_mse),
                format_real(s.ssim),
                s.nmi.map(format_real).unwrap_or_default()
            );
        }
    }
    Ok(out)
}

/// Metadata written next to similarity output.
pub fn similarity_meta() -> KvFile {
    let mut kv = KvFile::new();
    kv.set("ssim_window", SSIM_WINDOW);
    kv.set("ssim_kernel", "uniform");
    kv.set("nmi_bins", NMI_BINS);
    kv
}
