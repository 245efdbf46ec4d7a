//! Dense feed-forward networks with exact reverse-mode gradients.
//!
//! Layers compute `y = act(W x + b)` with `W` stored row-major as
//! `[out_dim, in_dim]`. An [`Mlp`] is a chain of layers; an [`AeModel`] pairs
//! an encoder and a decoder `Mlp` whose final activation is a sigmoid.

mod checkpoint;
mod model;

pub use checkpoint::{read_layers, write_layers, CHECKPOINT_MAGIC};
pub(crate) use model::{
    check_reconstruction_head, clamp_output, read_checkpoint, reconstruction_loss,
};
pub use model::{init_params, AeArchitecture, AeMasks, AeModel, Gradient, OUTPUT_CLAMP};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::tensor::{self, Tensor};

/// Leaky-ReLU slope used by every paper-conformant configuration.
pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    LeakyRelu { slope: f64 },
    Sigmoid,
    Identity,
}

impl Activation {
    pub const fn leaky_relu() -> Self {
        Activation::LeakyRelu { slope: LEAKY_SLOPE }
    }

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::LeakyRelu { slope } => {
                if z > 0.0 {
                    z
                } else {
                    slope * z
                }
            }
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output `a = act(z)`.
    #[inline]
    pub fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::LeakyRelu { slope } => {
                if a > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }

    /// Tag byte used in checkpoint files.
    pub fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Sigmoid => 1,
            Activation::LeakyRelu { .. } => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Sigmoid),
            2 => Some(Activation::leaky_relu()),
            _ => None,
        }
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            activation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub(crate) activation: Activation,
    /// `[out_dim, in_dim]`
    pub(crate) weights: Tensor,
    /// `[out_dim]`
    pub(crate) bias: Tensor,
}

impl Layer {
    pub fn new(weights: Tensor, bias: Tensor, activation: Activation) -> Result<Self> {
        if weights.shape().len() != 2 || bias.shape() != [weights.shape()[0]] {
            return Err(Error::Dimension(format!(
                "weights {:?} incompatible with bias {:?}",
                weights.shape(),
                bias.shape()
            )));
        }
        Ok(Self {
            activation,
            weights,
            bias,
        })
    }

    /// Gaussian weights with variance `1 / in_dim`, zero biases.
    pub fn init<R: Rng + ?Sized>(spec: LayerSpec, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, (1.0 / spec.in_dim as f64).sqrt())
            .expect("positive standard deviation");
        let weights: Vec<f64> = (0..spec.in_dim * spec.out_dim)
            .map(|_| normal.sample(rng))
            .collect();
        Self {
            activation: spec.activation,
            weights: Tensor::new(vec![spec.out_dim, spec.in_dim], weights)
                .expect("consistent layer shape"),
            bias: Tensor::zeros(&[spec.out_dim]),
        }
    }

    pub fn spec(&self) -> LayerSpec {
        LayerSpec::new(self.in_dim(), self.out_dim(), self.activation)
    }

    pub fn in_dim(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn out_dim(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &Tensor {
        &self.weights
    }

    pub fn bias(&self) -> &Tensor {
        &self.bias
    }

    fn forward(&self, x: &Tensor) -> Tensor {
        let mut z = tensor::affine(x, &self.weights, &self.bias);
        let act = self.activation;
        z.data_mut().iter_mut().for_each(|v| *v = act.apply(*v));
        z
    }
}

/// Per-layer multiplicative masks applied to activation outputs
/// (`None` leaves a layer untouched).
pub type LayerMasks = Vec<Option<Tensor>>;

/// Intermediate values recorded by [`Mlp::forward_trace`].
#[derive(Debug, Clone)]
pub struct Trace {
    /// Input fed to each layer (post-mask output of the previous one).
    inputs: Vec<Tensor>,
    /// Activation output of each layer, before masking.
    acts: Vec<Tensor>,
    masks: LayerMasks,
    output: Tensor,
}

impl Trace {
    pub fn output(&self) -> &Tensor {
        &self.output
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

impl Mlp {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Dimension("network needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::Dimension(format!(
                    "layer output {} does not feed layer input {}",
                    pair[0].out_dim(),
                    pair[1].in_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn init<R: Rng + ?Sized>(specs: &[LayerSpec], rng: &mut R) -> Result<Self> {
        Self::new(specs.iter().map(|&s| Layer::init(s, rng)).collect())
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub(crate) fn params(&self) -> impl Iterator<Item = &Tensor> {
        self.layers.iter().flat_map(|l| [&l.weights, &l.bias])
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weights, &mut l.bias])
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.shape().len() != 2 || x.cols() != self.in_dim() {
            return Err(Error::Dimension(format!(
                "expected [batch, {}] input, got {:?}",
                self.in_dim(),
                x.shape()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let mut h = self.layers[0].forward(x);
        for layer in &self.layers[1..] {
            h = layer.forward(&h);
        }
        Ok(h)
    }

    /// Forward pass that keeps everything needed by [`Mlp::backward`].
    pub fn forward_trace(&self, x: &Tensor, masks: Option<&LayerMasks>) -> Result<Trace> {
        self.check_input(x)?;
        let n = self.layers.len();
        let masks: LayerMasks = match masks {
            Some(m) if m.len() == n => m.clone(),
            Some(m) => {
                return Err(Error::Dimension(format!(
                    "{} masks for {n} layers",
                    m.len()
                )))
            }
            None => vec![None; n],
        };
        let mut inputs = Vec::with_capacity(n);
        let mut acts = Vec::with_capacity(n);
        let mut h = x.clone();
        for (layer, mask) in self.layers.iter().zip(&masks) {
            let a = layer.forward(&h);
            let next = match mask {
                Some(m) => {
                    if !m.same_shape(&a) {
                        return Err(Error::Dimension(format!(
                            "mask {:?} vs activation {:?}",
                            m.shape(),
                            a.shape()
                        )));
                    }
                    let mut out = a.clone();
                    for (o, &mv) in out.data_mut().iter_mut().zip(m.data()) {
                        *o *= mv;
                    }
                    out
                }
                None => a.clone(),
            };
            inputs.push(std::mem::replace(&mut h, next));
            acts.push(a);
        }
        Ok(Trace {
            inputs,
            acts,
            masks,
            output: h,
        })
    }

    /// Back-propagates `d_out` (gradient w.r.t. the traced output) and
    /// accumulates parameter gradients into `grads`, laid out as
    /// `[W0, b0, W1, b1, ...]`. Returns the gradient w.r.t. the input when
    /// `need_dx` is set.
    pub fn backward(
        &self,
        trace: &Trace,
        d_out: &Tensor,
        grads: &mut [Tensor],
        need_dx: bool,
    ) -> Option<Tensor> {
        debug_assert_eq!(grads.len(), 2 * self.layers.len());
        let mut delta = d_out.clone();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            if let Some(m) = &trace.masks[l] {
                for (d, &mv) in delta.data_mut().iter_mut().zip(m.data()) {
                    *d *= mv;
                }
            }
            let act = layer.activation;
            for (d, &a) in delta.data_mut().iter_mut().zip(trace.acts[l].data()) {
                *d *= act.derivative_from_output(a);
            }
            let (gw, gb) = grads[2 * l..2 * l + 2].split_at_mut(1);
            let dx = tensor::affine_backward(
                &trace.inputs[l],
                &layer.weights,
                &delta,
                &mut gw[0],
                &mut gb[0],
                l > 0 || need_dx,
            );
            match dx {
                Some(dx) if l > 0 => delta = dx,
                other => return other,
            }
        }
        None
    }

    pub(crate) fn zero_grads(&self) -> Vec<Tensor> {
        self.params().map(|p| Tensor::zeros(p.shape())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(800.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn activation_tags_round_trip() {
        for act in [
            Activation::Identity,
            Activation::Sigmoid,
            Activation::leaky_relu(),
        ] {
            assert_eq!(Activation::from_tag(act.tag()), Some(act));
        }
        assert_eq!(Activation::from_tag(9), None);
    }

    #[test]
    fn leaky_relu_uses_slope_on_negative_side() {
        let act = Activation::leaky_relu();
        assert_eq!(act.apply(-2.0), -0.02);
        assert_eq!(act.apply(3.0), 3.0);
        assert_eq!(act.derivative_from_output(act.apply(-2.0)), 0.01);
    }

    #[test]
    fn mlp_rejects_mismatched_layers() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = Layer::init(LayerSpec::new(3, 2, Activation::Identity), &mut rng);
        let b = Layer::init(LayerSpec::new(3, 1, Activation::Identity), &mut rng);
        assert!(Mlp::new(vec![a, b]).is_err());
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mlp = Mlp::init(&[LayerSpec::new(3, 2, Activation::Identity)], &mut rng).unwrap();
        let x = Tensor::zeros(&[1, 4]);
        assert!(matches!(mlp.forward(&x), Err(Error::Dimension(_))));
    }
}
