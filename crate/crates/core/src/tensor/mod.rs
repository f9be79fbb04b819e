//! Dense f32 tensors with reverse-mode differentiation.
//!
//! Activations use the (batch, channels, height, width) layout. The kernels in
//! [`ops`] are plain functions over [`Tensor`]; [`Tape`] records them so that
//! [`Tape::backward`] can replay their adjoints in reverse order.

pub mod adam;
mod gemm;
pub mod gradcheck;
pub mod ops;
pub mod tape;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{finite_diff_check, finite_diff_report, GradCheck};
pub use tape::{Gradients, Tape, Var};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let head: Vec<f32> = self.data.iter().take(8).copied().collect();
        f.debug_struct("Tensor").field("shape", &self.shape).field("head", &head).finish()
    }
}

impl Tensor {
    pub fn new(shape: &[usize], data: Vec<f32>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::dim(format!("invalid shape {shape:?}")));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::dim(format!("shape {shape:?} needs {n} values, got {}", data.len())));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn full(shape: &[usize], value: f32) -> Self {
        assert!(!shape.is_empty() && shape.iter().all(|&d| d > 0), "invalid shape {shape:?}");
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    pub fn scalar(value: f32) -> Self {
        Self::full(&[1], value)
    }

    /// Uniform samples in `[lo, hi)`.
    pub fn uniform<R: Rng + ?Sized>(shape: &[usize], lo: f32, hi: f32, rng: &mut R) -> Self {
        let mut t = Self::zeros(shape);
        for v in &mut t.data {
            *v = rng.gen_range(lo..hi);
        }
        t
    }

    pub fn randn<R: Rng + ?Sized>(shape: &[usize], std: f32, rng: &mut R) -> Self {
        let normal = Normal::new(0.0f32, std).expect("finite std");
        let mut t = Self::zeros(shape);
        for v in &mut t.data {
            *v = normal.sample(rng);
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> f32 {
        assert_eq!(self.data.len(), 1, "item() on tensor of shape {:?}", self.shape);
        self.data[0]
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() || shape.contains(&0) {
            return Err(Error::dim(format!("cannot reshape {:?} into {shape:?}", self.shape)));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// Unpacks a 4-D shape.
    pub fn dims4(&self) -> Result<(usize, usize, usize, usize)> {
        match self.shape[..] {
            [b, c, h, w] => Ok((b, c, h, w)),
            _ => Err(Error::dim(format!("expected 4-D tensor, got {:?}", self.shape))),
        }
    }

    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape[..] {
            [a, b] => Ok((a, b)),
            _ => Err(Error::dim(format!("expected 2-D tensor, got {:?}", self.shape))),
        }
    }

    /// Slice of the `i`-th entry along the leading axis.
    pub fn sample(&self, i: usize) -> &[f32] {
        let stride = self.data.len() / self.shape[0];
        &self.data[i * stride..(i + 1) * stride]
    }

    /// Stacks equally shaped tensors along a new leading axis, or concatenates
    /// along the existing leading axis when `shape[0]` is the batch dimension.
    pub fn cat_batch(parts: &[Tensor]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::dim("cat_batch of zero tensors"))?;
        let tail = &first.shape[1..];
        let mut batch = 0;
        let mut data = Vec::with_capacity(parts.iter().map(Tensor::len).sum());
        for p in parts {
            if &p.shape[1..] != tail {
                return Err(Error::dim(format!("cat_batch: {:?} vs {:?}", p.shape, first.shape)));
            }
            batch += p.shape[0];
            data.extend_from_slice(&p.data);
        }
        let mut shape = vec![batch];
        shape.extend_from_slice(tail);
        Tensor::new(&shape, data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &Tensor) -> f64 {
        self.data.iter().zip(&other.data).map(|(&a, &b)| a as f64 * b as f64).sum()
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f32 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f32::max)
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub(crate) fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}
