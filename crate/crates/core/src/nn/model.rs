use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{read_layers, write_layers, Activation, LayerMasks, LayerSpec, Mlp};
use crate::error::{Error, Result};
use crate::likelihood::LikelihoodKind;
use crate::tensor::Tensor;

/// Reconstructions are clamped to `[OUTPUT_CLAMP, 1 - OUTPUT_CLAMP]`.
pub const OUTPUT_CLAMP: f64 = 1e-7;

#[inline]
pub(crate) fn clamp_output(a: f64) -> f64 {
    a.clamp(OUTPUT_CLAMP, 1.0 - OUTPUT_CLAMP)
}

/// Layer layout of an autoencoder before any parameters exist.
#[derive(Debug, Clone, PartialEq)]
pub struct AeArchitecture {
    pub encoder: Vec<LayerSpec>,
    pub decoder: Vec<LayerSpec>,
}

impl AeArchitecture {
    /// Symmetric fully-connected autoencoder `D → hidden… → latent → …hidden → D`.
    ///
    /// Hidden layers use leaky ReLU (slope 0.01), the reconstruction head a
    /// sigmoid. `encoder_head` is the activation of the latent layer, and
    /// `encoder_out` its width (twice the latent size for a VAE).
    pub fn fully_connected(
        input_dim: usize,
        hidden: &[usize],
        latent_dim: usize,
        encoder_out: usize,
        encoder_head: Activation,
    ) -> Result<Self> {
        if input_dim == 0 || latent_dim == 0 || encoder_out == 0 || hidden.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        let leaky = Activation::leaky_relu();
        let mut encoder = Vec::new();
        let mut prev = input_dim;
        for &h in hidden {
            encoder.push(LayerSpec::new(prev, h, leaky));
            prev = h;
        }
        encoder.push(LayerSpec::new(prev, encoder_out, encoder_head));

        let mut decoder = Vec::new();
        prev = latent_dim;
        for &h in hidden.iter().rev() {
            decoder.push(LayerSpec::new(prev, h, leaky));
            prev = h;
        }
        decoder.push(LayerSpec::new(prev, input_dim, Activation::Sigmoid));
        Ok(Self { encoder, decoder })
    }

    /// Plain autoencoder with a leaky-ReLU latent layer.
    pub fn autoencoder(input_dim: usize, hidden: &[usize], latent_dim: usize) -> Result<Self> {
        Self::fully_connected(
            input_dim,
            hidden,
            latent_dim,
            latent_dim,
            Activation::leaky_relu(),
        )
    }

    pub fn all_layers(&self) -> impl Iterator<Item = &LayerSpec> {
        self.encoder.iter().chain(&self.decoder)
    }

    fn validate_chain(specs: &[LayerSpec], what: &str) -> Result<()> {
        if specs.is_empty() {
            return Err(Error::Config(format!("{what} has no layers")));
        }
        for s in specs {
            if s.in_dim == 0 || s.out_dim == 0 {
                return Err(Error::Config(format!("{what} layer with zero width")));
            }
        }
        for w in specs.windows(2) {
            if w[0].out_dim != w[1].in_dim {
                return Err(Error::Config(format!(
                    "{what}: layer output {} does not match next input {}",
                    w[0].out_dim, w[1].in_dim
                )));
            }
        }
        Ok(())
    }
}

/// Deterministic autoencoder `x̂ = decoder(encoder(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct AeModel {
    encoder: Mlp,
    decoder: Mlp,
}

impl AeModel {
    pub fn new(encoder: Mlp, decoder: Mlp) -> Result<Self> {
        if encoder.out_dim() != decoder.in_dim() {
            return Err(Error::Dimension(format!(
                "encoder emits {} values, decoder expects {}",
                encoder.out_dim(),
                decoder.in_dim()
            )));
        }
        check_reconstruction_head(&decoder, encoder.in_dim())?;
        Ok(Self { encoder, decoder })
    }

    pub fn encoder(&self) -> &Mlp {
        &self.encoder
    }

    pub fn decoder(&self) -> &Mlp {
        &self.decoder
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.in_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.decoder.in_dim()
    }

    pub fn architecture(&self) -> AeArchitecture {
        AeArchitecture {
            encoder: self.encoder.layers().iter().map(|l| l.spec()).collect(),
            decoder: self.decoder.layers().iter().map(|l| l.spec()).collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count() + self.decoder.param_count()
    }

    /// Parameter tensors in canonical order: encoder `W0, b0, …`, then decoder.
    pub fn params(&self) -> impl Iterator<Item = &Tensor> {
        self.encoder.params().chain(self.decoder.params())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.encoder.params_mut().chain(self.decoder.params_mut())
    }

    /// Replaces every parameter value, keeping the architecture.
    pub fn with_params(&self, values: &[Tensor]) -> Result<Self> {
        let mut out = self.clone();
        let slots: Vec<&mut Tensor> = out.params_mut().collect();
        if slots.len() != values.len() {
            return Err(Error::Dimension(format!(
                "{} parameter tensors supplied for {} slots",
                values.len(),
                slots.len()
            )));
        }
        for (slot, v) in slots.into_iter().zip(values) {
            if !slot.same_shape(v) {
                return Err(Error::Dimension(format!(
                    "parameter shape {:?} vs {:?}",
                    v.shape(),
                    slot.shape()
                )));
            }
            *slot = v.clone();
        }
        Ok(out)
    }

    pub fn encode(&self, x: &Tensor) -> Result<Tensor> {
        self.encoder.forward(x)
    }

    /// Clamped reconstruction; every element lies in `(0, 1)`.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let h = self.encoder.forward(x)?;
        Ok(self.decoder.forward(&h)?.map(clamp_output))
    }

    /// Reconstruction with per-layer activation masks (used by MC-Dropout).
    pub fn forward_masked(&self, x: &Tensor, masks: &AeMasks) -> Result<Tensor> {
        let enc = self.encoder.forward_trace(x, Some(&masks.encoder))?;
        let dec = self
            .decoder
            .forward_trace(enc.output(), Some(&masks.decoder))?;
        Ok(dec.output().map(clamp_output))
    }

    /// Mean negative log-likelihood over batch and pixels, with its gradient.
    pub fn backward(&self, x: &Tensor, kind: LikelihoodKind) -> Result<(f64, Gradient)> {
        self.loss_and_grad(x, kind, None)
    }

    pub fn loss_and_grad(
        &self,
        x: &Tensor,
        kind: LikelihoodKind,
        masks: Option<&AeMasks>,
    ) -> Result<(f64, Gradient)> {
        let enc = self.encoder.forward_trace(x, masks.map(|m| &m.encoder))?;
        let dec = self
            .decoder
            .forward_trace(enc.output(), masks.map(|m| &m.decoder))?;
        let (loss, d_out) = reconstruction_loss(kind, x, dec.output())?;

        let mut enc_grads = self.encoder.zero_grads();
        let mut dec_grads = self.decoder.zero_grads();
        let d_latent = self
            .decoder
            .backward(&dec, &d_out, &mut dec_grads, true)
            .expect("input gradient requested");
        self.encoder
            .backward(&enc, &d_latent, &mut enc_grads, false);
        enc_grads.extend(dec_grads);
        Ok((loss, Gradient::new(enc_grads)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let layers: Vec<_> = self
            .encoder
            .layers()
            .iter()
            .chain(self.decoder.layers())
            .collect();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        write_layers(&mut w, &layers).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }

    /// Loads a checkpoint whose first `encoder_layers` layers form the encoder.
    pub fn load(path: &Path, encoder_layers: usize) -> Result<Self> {
        let mut layers = read_checkpoint(path)?;
        if encoder_layers == 0 || encoder_layers >= layers.len() {
            return Err(Error::Format(format!(
                "{}: cannot split {} layers with {encoder_layers} encoder layers",
                path.display(),
                layers.len()
            )));
        }
        let decoder = layers.split_off(encoder_layers);
        Self::new(Mlp::new(layers)?, Mlp::new(decoder)?)
    }
}

pub(crate) fn read_checkpoint(path: &Path) -> Result<Vec<super::Layer>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_layers(&mut std::io::BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub(crate) fn check_reconstruction_head(decoder: &Mlp, input_dim: usize) -> Result<()> {
    if decoder.out_dim() != input_dim {
        return Err(Error::Dimension(format!(
            "decoder emits {} values for {input_dim}-pixel inputs",
            decoder.out_dim()
        )));
    }
    let last = decoder.layers().last().expect("non-empty decoder");
    if last.activation() != Activation::Sigmoid {
        return Err(Error::Config(
            "final decoder activation must be a sigmoid".into(),
        ));
    }
    Ok(())
}

/// Loss `-(1/(B·D)) Σ LL` on the clamped reconstruction and its gradient
/// with respect to the unclamped sigmoid output `a`.
pub(crate) fn reconstruction_loss(
    kind: LikelihoodKind,
    x: &Tensor,
    a: &Tensor,
) -> Result<(f64, Tensor)> {
    if !x.same_shape(a) {
        return Err(Error::Dimension(format!(
            "target {:?} vs reconstruction {:?}",
            x.shape(),
            a.shape()
        )));
    }
    let scale = 1.0 / x.len() as f64;
    let mut grad = Tensor::zeros(a.shape());
    let mut total = 0.0;
    for ((g, &xv), &av) in grad.data_mut().iter_mut().zip(x.data()).zip(a.data()) {
        let xhat = clamp_output(av);
        total += kind.pixel_ll(xv, xhat);
        // the clamp is flat outside its range
        if xhat == av {
            *g = -scale * kind.pixel_ll_grad(xv, xhat);
        }
    }
    let loss = -total * scale;
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("non-finite {kind} loss")));
    }
    Ok((loss, grad))
}

/// Dropout masks for both halves of an autoencoder.
#[derive(Debug, Clone, PartialEq)]
pub struct AeMasks {
    pub encoder: LayerMasks,
    pub decoder: LayerMasks,
}

/// One gradient tensor per model parameter tensor, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    tensors: Vec<Tensor>,
}

impl Gradient {
    pub fn new(tensors: Vec<Tensor>) -> Self {
        Self { tensors }
    }

    pub fn zeros_like<'a>(params: impl Iterator<Item = &'a Tensor>) -> Self {
        Self::new(params.map(|p| Tensor::zeros(p.shape())).collect())
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn into_tensors(self) -> Vec<Tensor> {
        self.tensors
    }

    pub fn is_congruent(&self, model: &AeModel) -> bool {
        self.tensors.len() == model.params().count()
            && self
                .tensors
                .iter()
                .zip(model.params())
                .all(|(g, p)| g.same_shape(p))
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors
            .iter()
            .flat_map(|t| t.data())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Draws a model: Gaussian weights with variance `1 / fan_in`, zero biases.
pub fn init_params(arch: &AeArchitecture, seed: u64) -> Result<AeModel> {
    AeArchitecture::validate_chain(&arch.encoder, "encoder")?;
    AeArchitecture::validate_chain(&arch.decoder, "decoder")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let encoder = Mlp::init(&arch.encoder, &mut rng)?;
    let decoder = Mlp::init(&arch.decoder, &mut rng)?;
    AeModel::new(encoder, decoder)
}
