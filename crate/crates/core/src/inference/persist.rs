//! Checkpoint directories: one network file per posterior component plus a
//! flat `key=value` manifest.

use std::io::Write;
use std::path::Path;

use super::{Family, Posterior, PosteriorSampler, Vae, VariationalParams};
use crate::data::KvFile;
use crate::error::{Error, Result};
use crate::likelihood::LikelihoodKind;
use crate::nn::{read_checkpoint, write_layers, AeModel, Layer};

pub const MANIFEST_FILE: &str = "manifest.txt";

fn member_file(j: usize) -> String {
    format!("member_{j:02}.bae")
}

fn write_layer_file(path: &Path, layers: &[&Layer]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_layers(&mut w, layers)
        .and_then(|_| w.flush().map_err(|e| Error::io(path, e)))
        .map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
}

fn model_layers(m: &AeModel) -> Vec<&Layer> {
    m.encoder()
        .layers()
        .iter()
        .chain(m.decoder().layers())
        .collect()
}

/// Writes `sampler` into `dir` (created if missing). `extra` entries are
/// appended to the manifest verbatim.
pub fn save_sampler(
    dir: &Path,
    sampler: &PosteriorSampler,
    extra: &[(&str, String)],
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut kv = KvFile::new();
    kv.set("family", sampler.family());
    kv.set("likelihood", sampler.likelihood());
    kv.set("samples", sampler.samples());
    kv.set("seed", sampler.seed());
    match sampler.posterior() {
        Posterior::Deterministic(m) => {
            kv.set("encoder_layers", m.encoder().layers().len());
            m.save(&dir.join("model.bae"))?;
        }
        Posterior::McDropout { model, p_drop } => {
            kv.set("encoder_layers", model.encoder().layers().len());
            kv.set("p_drop", p_drop);
            model.save(&dir.join("model.bae"))?;
        }
        Posterior::AnchoredEnsemble(ms) => {
            kv.set("encoder_layers", ms[0].encoder().layers().len());
            kv.set("members", ms.len());
            for (j, m) in ms.iter().enumerate() {
                m.save(&dir.join(member_file(j)))?;
            }
        }
        Posterior::BayesByBackprop(q) => {
            let mean = q.mean();
            kv.set("encoder_layers", mean.encoder().layers().len());
            mean.save(&dir.join("mean.bae"))?;
            let rho_layers = model_layers(mean)
                .iter()
                .zip(q.rho().chunks(2))
                .map(|(l, r)| Layer::new(r[0].clone(), r[1].clone(), l.activation()))
                .collect::<Result<Vec<_>>>()?;
            write_layer_file(&dir.join("rho.bae"), &rho_layers.iter().collect::<Vec<_>>())?;
        }
        Posterior::Vae(v) => {
            kv.set("encoder_layers", v.encoder().layers().len());
            let layers: Vec<&Layer> = v
                .encoder()
                .layers()
                .iter()
                .chain(v.decoder().layers())
                .collect();
            write_layer_file(&dir.join("vae.bae"), &layers)?;
        }
    }
    kv.set("input_dim", sampler.posterior().input_dim());
    for (k, v) in extra {
        kv.set(k, v);
    }
    kv.save(&dir.join(MANIFEST_FILE))
}

/// Reads a directory written by [`save_sampler`]; also returns the manifest.
pub fn load_sampler(dir: &Path) -> Result<(PosteriorSampler, KvFile)> {
    let kv = KvFile::load(&dir.join(MANIFEST_FILE))?;
    let family: Family = kv.require("family")?;
    let likelihood: LikelihoodKind = kv.require("likelihood")?;
    let samples: usize = kv.require("samples")?;
    let seed: u64 = kv.require("seed")?;
    let enc: usize = kv.require("encoder_layers")?;
    let posterior = match family {
        Family::Deterministic => {
            Posterior::Deterministic(AeModel::load(&dir.join("model.bae"), enc)?)
        }
        Family::McDropout => Posterior::McDropout {
            model: AeModel::load(&dir.join("model.bae"), enc)?,
            p_drop: {
                let p: f64 = kv.require("p_drop")?;
                super::ae::check_p_drop(p)?;
                p
            },
        },
        Family::AnchoredEnsemble => {
            let members: usize = kv.require("members")?;
            if members < 2 {
                return Err(Error::Config(format!(
                    "ensemble manifest lists {members} members"
                )));
            }
            Posterior::AnchoredEnsemble(
                (0..members)
                    .map(|j| AeModel::load(&dir.join(member_file(j)), enc))
                    .collect::<Result<_>>()?,
            )
        }
        Family::BayesByBackprop => {
            let mean = AeModel::load(&dir.join("mean.bae"), enc)?;
            let rho_layers = read_checkpoint(&dir.join("rho.bae"))?;
            let rho = rho_layers
                .iter()
                .flat_map(|l| [l.weights().clone(), l.bias().clone()])
                .collect();
            Posterior::BayesByBackprop(VariationalParams::from_parts(mean, rho)?)
        }
        Family::Vae => Posterior::Vae(Vae::from_layers(
            read_checkpoint(&dir.join("vae.bae"))?,
            enc,
        )?),
    };
    let input_dim: usize = kv.require("input_dim")?;
    if input_dim != posterior.input_dim() {
        return Err(Error::Format(format!(
            "manifest input_dim {input_dim} but networks take {}",
            posterior.input_dim()
        )));
    }
    let sampler = PosteriorSampler::new(posterior, likelihood, seed).with_samples(samples)?;
    Ok((sampler, kv))
}
