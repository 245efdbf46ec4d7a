//! Experiment configuration: flat `key=value` files plus command-line
//! overrides, resolved and validated before any compute starts.

use std::path::{Path, PathBuf};

use bae_core::data::{generate_synthetic, load_idx, KvFile};
use bae_core::inference::{DEFAULT_P_DROP, DEFAULT_SAMPLES};
use bae_core::{Dataset, Error, Family, Result, Split, SyntheticKind, SyntheticSpec, TrainConfig};

pub const DATA_DIR_ENV: &str = "BAE_DATA_DIR";
pub const DEFAULT_MEMBERS: usize = 5;

/// Where images come from: a synthetic generator or an IDX file.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    Idx(PathBuf),
}

impl DataSource {
    /// `synthetic:<kind>:<n>:<side>[:<zero_fraction>[:<seed>]]`, otherwise a
    /// path. Relative paths that do not exist are retried under `$BAE_DATA_DIR`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::Config("empty dataset source".into()));
        }
        if let Some(rest) = text.strip_prefix("synthetic:") {
            return parse_synthetic(rest).map(DataSource::Synthetic);
        }
        Ok(DataSource::Idx(resolve_path(Path::new(text))))
    }

    /// Checks a source can be loaded without generating or reading it fully.
    pub fn check(&self) -> Result<()> {
        match self {
            DataSource::Synthetic(spec) => spec.validate(),
            DataSource::Idx(p) if p.is_file() => Ok(()),
            DataSource::Idx(p) => Err(Error::Io {
                path: p.clone(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "dataset file not found"),
            }),
        }
    }

    pub fn load(&self, split: Split) -> Result<Dataset> {
        let mut d = match self {
            DataSource::Synthetic(spec) => generate_synthetic(spec)?,
            DataSource::Idx(p) => load_idx(p, split, None)?,
        };
        d.split = split;
        Ok(d)
    }
}

impl std::fmt::Display for DataSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DataSource::Synthetic(s) => write!(
                f,
                "synthetic:{}:{}:{}:{}:{}",
                s.kind, s.n, s.side, s.zero_fraction, s.seed
            ),
            DataSource::Idx(p) => write!(f, "{}", p.display()),
        }
    }
}

fn parse_synthetic(rest: &str) -> Result<SyntheticSpec> {
    let parts: Vec<&str> = rest.split(':').collect();
    if !(3..=5).contains(&parts.len()) {
        return Err(Error::Config(format!(
            "synthetic source needs kind:n:side[:zero_fraction[:seed]], got '{rest}'"
        )));
    }
    let num = |s: &str, what: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Config(format!("synthetic {what} '{s}' is not an integer")))
    };
    let kind: SyntheticKind = parts[0].parse()?;
    let mut spec = SyntheticSpec::new(kind, num(parts[1], "n")?, num(parts[2], "side")?, 0);
    if let Some(zf) = parts.get(3) {
        spec.zero_fraction = zf.parse().map_err(|_| {
            Error::Config(format!("synthetic zero fraction '{zf}' is not a number"))
        })?;
    }
    if let Some(seed) = parts.get(4) {
        spec.seed = seed
            .parse()
            .map_err(|_| Error::Config(format!("synthetic seed '{seed}' is not an integer")))?;
    }
    spec.validate()?;
    Ok(spec)
}

fn resolve_path(p: &Path) -> PathBuf {
    if p.is_relative() && !p.exists() {
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
            let candidate = Path::new(&dir).join(p);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    p.to_path_buf()
}

/// Everything `train` needs, fully resolved.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub family: Family,
    pub train: TrainConfig,
    pub members: usize,
    pub p_drop: f64,
    pub samples: usize,
    pub lr_find: bool,
    pub data: DataSource,
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub ensemble: Option<usize>,
    pub workers: Option<usize>,
    pub family: Option<String>,
    pub likelihood: Option<String>,
    pub data: Option<String>,
}

const KNOWN_KEYS: &[&str] = &[
    "family",
    "likelihood",
    "reg_scale",
    "seed",
    "epochs",
    "batch_size",
    "lr_min",
    "lr_max",
    "cycle_epochs",
    "hidden",
    "latent_dim",
    "workers",
    "members",
    "p_drop",
    "samples",
    "lr_find",
    "train_data",
];

impl ExperimentConfig {
    pub fn from_kv(kv: &KvFile, ov: &Overrides) -> Result<Self> {
        if let Some(k) = kv.keys().find(|k| !KNOWN_KEYS.contains(k)) {
            return Err(Error::Config(format!("unknown config key '{k}'")));
        }
        let d = TrainConfig::default();
        let family: Family = match &ov.family {
            Some(f) => f.parse()?,
            None => kv.get_or("family", Family::Deterministic)?,
        };
        let likelihood = match &ov.likelihood {
            Some(l) => l.parse()?,
            None => kv.get_or("likelihood", d.likelihood)?,
        };
        let members = match ov.ensemble {
            Some(m) => m,
            None => kv.get_or("members", DEFAULT_MEMBERS)?,
        };
        // --ensemble on its own selects the anchored ensemble
        let family = if ov.ensemble.is_some() && ov.family.is_none() && !kv.contains("family") {
            Family::AnchoredEnsemble
        } else {
            family
        };
        let train = TrainConfig {
            epochs: kv.get_or("epochs", d.epochs)?,
            batch_size: kv.get_or("batch_size", d.batch_size)?,
            reg_scale: kv.get_or("reg_scale", d.reg_scale)?,
            likelihood,
            seed: match ov.seed {
                Some(s) => s,
                None => kv.get_or("seed", d.seed)?,
            },
            lr_min: kv.get_or("lr_min", d.lr_min)?,
            lr_max: kv.get_or("lr_max", d.lr_max)?,
            cycle_epochs: kv.get_or("cycle_epochs", d.cycle_epochs)?,
            hidden: kv.get_list("hidden")?.unwrap_or(d.hidden),
            latent_dim: kv.get_or("latent_dim", d.latent_dim)?,
            workers: match ov.workers {
                Some(w) => w,
                None => kv.get_or("workers", d.workers)?,
            },
        };
        train.validate()?;
        let data_text = ov
            .data
            .clone()
            .or_else(|| kv.get_str("train_data").map(str::to_string))
            .ok_or_else(|| {
                Error::Config("no training data: set train_data or pass --data".into())
            })?;
        let cfg = Self {
            family,
            train,
            members,
            p_drop: kv.get_or("p_drop", DEFAULT_P_DROP)?,
            samples: match ov.samples {
                Some(t) => t,
                None => kv.get_or("samples", DEFAULT_SAMPLES)?,
            },
            lr_find: kv.get_or("lr_find", false)?,
            data: DataSource::parse(&data_text)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.family == Family::AnchoredEnsemble && self.members < 2 {
            return Err(Error::Config(format!(
                "ensemble needs at least 2 members, got {}",
                self.members
            )));
        }
        if self.family == Family::McDropout && !(self.p_drop > 0.0 && self.p_drop < 1.0) {
            return Err(Error::Config(format!(
                "p_drop {} outside (0, 1)",
                self.p_drop
            )));
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        self.data.check()
    }

    /// Manifest entries recording how the checkpoint was produced.
    pub fn manifest_extra(&self, height: usize, width: usize) -> Vec<(&'static str, String)> {
        let t = &self.train;
        vec![
            ("height", height.to_string()),
            ("width", width.to_string()),
            ("reg_scale", t.reg_scale.to_string()),
            ("epochs", t.epochs.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("lr_min", t.lr_min.to_string()),
            ("lr_max", t.lr_max.to_string()),
            ("cycle_epochs", t.cycle_epochs.to_string()),
            (
                "hidden",
                t.hidden
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("latent_dim", t.latent_dim.to_string()),
            ("train_data", self.data.to_string()),
        ]
    }
}
