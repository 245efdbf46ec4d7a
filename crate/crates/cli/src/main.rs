//! `bae`: train Bayesian autoencoders, score inputs, evaluate OOD detection
//! and inspect likelihood ceilings.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bae_core::data::{write_text, KvFile};
use bae_core::{Error, LikelihoodKind};
use clap::{Args, Parser, Subcommand};

use config::{DataSource, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(
    name = "bae",
    version,
    about = "Bayesian autoencoder OOD detection toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model family and write a checkpoint directory.
    Train(TrainArgs),
    /// Score a dataset with a trained checkpoint.
    Score(ScoreArgs),
    /// Compare in-distribution and OOD score files.
    Eval(EvalArgs),
    /// Emit maximum attainable log-likelihood curves over pixel values.
    AnalyzeLikelihood(AnalyzeArgs),
    /// Similarity between inputs and their mean reconstructions.
    Similarity(SimilarityArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Flat key=value experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Posterior samples recorded for scoring.
    #[arg(long)]
    samples: Option<usize>,
    /// Anchored ensemble with this many members.
    #[arg(long)]
    ensemble: Option<usize>,
    /// Train every regularisation strength of the sweep into lambda_<v>/.
    #[arg(long)]
    sweep: bool,
    #[arg(long, default_value = "bae_out")]
    out_dir: PathBuf,
    /// Worker threads for ensemble members; defaults to one per member.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    likelihood: Option<String>,
    /// Training data: IDX path or synthetic:<kind>:<n>:<side>[:<zf>[:<seed>]].
    #[arg(long)]
    data: Option<String>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: String,
    #[arg(long)]
    out: PathBuf,
    /// Row label; defaults to the dataset name.
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Expected likelihood; a mismatch with the checkpoint is an error.
    #[arg(long)]
    likelihood: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long = "in")]
    in_csv: PathBuf,
    #[arg(long)]
    ood: PathBuf,
    #[arg(long, default_value = "eval_out")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 20)]
    bins: usize,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long, default_value_t = 101)]
    grid: usize,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimilarityArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: String,
    #[arg(long, default_value = "similarity_out")]
    out_dir: PathBuf,
    #[arg(long)]
    samples: Option<usize>,
    /// Only the first N images.
    #[arg(long)]
    limit: Option<usize>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Diverged { .. } | Error::Numeric(_) | Error::FinderFailed(_) => 3,
        Error::Io { .. } | Error::Format(_) | Error::Length(_) | Error::Parse { .. } => 4,
        Error::Config(_) | Error::Argument(_) | Error::Dimension(_) | Error::Degenerate(_) => 2,
    }
}

fn run(cli: Cli) -> bae_core::Result<()> {
    match cli.command {
        Command::Train(a) => {
            let kv = match &a.config {
                Some(p) => KvFile::load(p)?,
                None => KvFile::new(),
            };
            let ov = Overrides {
                seed: a.seed,
                samples: a.samples,
                ensemble: a.ensemble,
                workers: a.workers,
                family: a.family,
                likelihood: a.likelihood,
                data: a.data,
            };
            let cfg = ExperimentConfig::from_kv(&kv, &ov)?;
            for dir in commands::train(&cfg, &a.out_dir, a.sweep)? {
                println!("{}", dir.display());
            }
        }
        Command::Score(a) => {
            let likelihood = a
                .likelihood
                .as_deref()
                .map(str::parse::<LikelihoodKind>)
                .transpose()?;
            let data = DataSource::parse(&a.data)?;
            data.check()?;
            let n = commands::score(&commands::ScoreArgs {
                checkpoint: &a.checkpoint,
                data: &data,
                label: a.label.as_deref(),
                samples: a.samples,
                likelihood,
                seed: a.seed,
                out: &a.out,
            })?;
            println!("scored {n} inputs -> {}", a.out.display());
        }
        Command::Eval(a) => {
            let rows = commands::eval(&a.in_csv, &a.ood, &a.out_dir, a.bins)?;
            println!("method      auroc   auprc   fpr80");
            for r in rows {
                let e = r.result;
                println!(
                    "{:<10} {:>6.3} {:>7.3} {:>7.3}",
                    r.method.name(),
                    e.auroc,
                    e.auprc,
                    e.fpr80
                );
            }
        }
        Command::AnalyzeLikelihood(a) => {
            let csv = commands::analyze_likelihood(a.grid)?;
            match &a.out {
                Some(p) => write_text(p, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Similarity(a) => {
            let data = DataSource::parse(&a.data)?;
            data.check()?;
            let csv = commands::similarity_report(&a.checkpoint, &data, a.samples, a.limit)?;
            create_dir(&a.out_dir)?;
            write_text(&a.out_dir.join("similarity.csv"), &csv)?;
            commands::similarity_meta().save(&a.out_dir.join("similarity_meta.txt"))?;
        }
    }
    Ok(())
}

fn create_dir(p: &Path) -> bae_core::Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::Io {
        path: p.into(),
        source: e,
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
