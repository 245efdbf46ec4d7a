//! Dense row-major `f64` arrays.
//!
//! `Tensor` is the single numeric carrier used throughout the crate: images,
//! activations, parameters and gradients. Only the handful of kernels the
//! autoencoders need are provided; everything is single-threaded.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::Dimension(format!(
                "shape must be non-empty with positive extents, got {shape:?}"
            )));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} implies {expected} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        let n = shape.iter().product();
        assert!(n > 0, "tensor shape must have positive extents: {shape:?}");
        Self {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    /// Builds a `[rows, cols]` tensor from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(vec![rows.len(), cols], rows.concat())
    }

    pub fn vector(data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Self::new(vec![n], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Number of rows when viewed as a matrix (first axis).
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Product of all trailing axes.
    pub fn cols(&self) -> usize {
        self.shape[1..].iter().product()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() || shape.contains(&0) {
            return Err(Error::Dimension(format!(
                "cannot reshape {:?} into {shape:?}",
                self.shape
            )));
        }
        self.shape = shape;
        Ok(self)
    }

    /// Copies the listed rows into a new `[indices.len(), cols]` tensor.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let c = self.cols();
        let mut data = Vec::with_capacity(indices.len() * c);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        let mut shape = self.shape.clone();
        shape[0] = indices.len();
        Self { shape, data }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.shape == other.shape
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }
}

/// `out[b, o] = sum_i x[b, i] * w[o, i] + bias[o]` for `w` stored `[out, in]`.
pub(crate) fn affine(x: &Tensor, w: &Tensor, bias: &Tensor) -> Tensor {
    let (batch, in_dim) = (x.rows(), x.cols());
    let out_dim = w.shape[0];
    debug_assert_eq!(w.shape[1], in_dim);
    let mut out = Vec::with_capacity(batch * out_dim);
    for b in 0..batch {
        let xr = x.row(b);
        for o in 0..out_dim {
            let wr = &w.data[o * in_dim..(o + 1) * in_dim];
            out.push(dot(xr, wr) + bias.data[o]);
        }
    }
    Tensor {
        shape: vec![batch, out_dim],
        data: out,
    }
}

/// Accumulates `dw += dz^T x` and `db += sum_b dz`, returns `dx = dz w`.
pub(crate) fn affine_backward(
    x: &Tensor,
    w: &Tensor,
    dz: &Tensor,
    dw: &mut Tensor,
    db: &mut Tensor,
    need_dx: bool,
) -> Option<Tensor> {
    let (batch, in_dim) = (x.rows(), x.cols());
    for b in 0..batch {
        let xr = x.row(b);
        let dzr = dz.row(b);
        for (o, &g) in dzr.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            db.data[o] += g;
            let dwr = &mut dw.data[o * in_dim..(o + 1) * in_dim];
            for (d, &xv) in dwr.iter_mut().zip(xr) {
                *d += g * xv;
            }
        }
    }
    if !need_dx {
        return None;
    }
    let mut dx = vec![0.0; batch * in_dim];
    for b in 0..batch {
        let dzr = dz.row(b);
        let dxr = &mut dx[b * in_dim..(b + 1) * in_dim];
        for (o, &g) in dzr.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let wr = &w.data[o * in_dim..(o + 1) * in_dim];
            for (d, &wv) in dxr.iter_mut().zip(wr) {
                *d += g * wv;
            }
        }
    }
    Some(Tensor {
        shape: vec![batch, in_dim],
        data: dx,
    })
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inconsistent_shape() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::new(vec![0], vec![]).is_err());
        assert!(Tensor::new(vec![2, 3], vec![0.0; 6]).is_ok());
    }

    #[test]
    fn affine_matches_hand_product() {
        let x = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let w = Tensor::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![0.5, -1.0]]).unwrap();
        let b = Tensor::vector(vec![0.0, 1.0, 2.0]).unwrap();
        let out = affine(&x, &w, &b);
        assert_eq!(out.shape(), &[2, 3]);
        assert_eq!(out.data(), &[1.0, 4.0, 0.5, 3.0, 8.0, -0.5]);
    }

    #[test]
    fn select_rows_copies_in_order() {
        let x = Tensor::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let s = x.select_rows(&[2, 0, 2]);
        assert_eq!(s.data(), &[3.0, 1.0, 3.0]);
    }
}
