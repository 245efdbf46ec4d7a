//! Portable binary checkpoint for a layer stack.
//!
//! ```text
//! "BAE1"                      4 bytes magic
//! u32 LE                      layer count
//! per layer:
//!   u32 LE in_dim, u32 LE out_dim
//!   u8 activation tag         0 = identity, 1 = sigmoid, 2 = leaky ReLU (slope 0.01)
//!   f64 LE × out_dim·in_dim   weights, row-major [out_dim, in_dim]
//!   f64 LE × out_dim          bias
//! ```

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{Activation, Layer};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"BAE1";

fn io_err(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Length("checkpoint truncated".into())
    } else {
        Error::io("<checkpoint stream>", e)
    }
}

pub fn write_layers<W: Write>(w: &mut W, layers: &[&Layer]) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC).map_err(io_err)?;
    w.write_u32::<LittleEndian>(layers.len() as u32)
        .map_err(io_err)?;
    for layer in layers {
        w.write_u32::<LittleEndian>(layer.in_dim() as u32)
            .map_err(io_err)?;
        w.write_u32::<LittleEndian>(layer.out_dim() as u32)
            .map_err(io_err)?;
        w.write_u8(layer.activation().tag()).map_err(io_err)?;
        for &v in layer.weights().data().iter().chain(layer.bias().data()) {
            w.write_f64::<LittleEndian>(v).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

pub fn read_layers<R: Read>(r: &mut R) -> Result<Vec<Layer>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format(format!("bad checkpoint magic {magic:?}")));
    }
    let count = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
    let mut layers = Vec::with_capacity(count.min(1024));
    for i in 0..count {
        let in_dim = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
        let out_dim = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Format(format!("layer {i} has a zero dimension")));
        }
        let tag = r.read_u8().map_err(io_err)?;
        let activation = Activation::from_tag(tag)
            .ok_or_else(|| Error::Format(format!("layer {i}: unknown activation tag {tag}")))?;
        let mut read_vec = |n: usize| -> Result<Vec<f64>> {
            let mut v = vec![0.0; n];
            r.read_f64_into::<LittleEndian>(&mut v).map_err(io_err)?;
            Ok(v)
        };
        let weights = read_vec(in_dim * out_dim)?;
        let bias = read_vec(out_dim)?;
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Format(format!("layer {i} holds non-finite values")));
        }
        layers.push(Layer::new(
            Tensor::new(vec![out_dim, in_dim], weights)?,
            Tensor::new(vec![out_dim], bias)?,
            activation,
        )?);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(io_err)? != 0 {
        return Err(Error::Length("trailing bytes after last layer".into()));
    }
    Ok(layers)
}
