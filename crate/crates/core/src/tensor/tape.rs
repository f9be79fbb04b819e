//! Reverse-mode differentiation by operation recording.
//!
//! Every op appends a node holding its output value and input handles; nodes
//! are only ever appended, so node order is execution order and
//! [`Tape::backward`] walks it back to front.

use super::{ops, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Conv2d { x: Var, w: Var, b: Var, stride: usize },
    ConvTranspose2d { x: Var, w: Var, b: Var },
    Relu(Var),
    Sigmoid(Var),
    Linear { x: Var, w: Var, b: Var },
    ConcatChannels(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Scale(Var, f32),
    OneMinus(Var),
    LogClamped(Var, f32),
    GlobalAvgPool(Var),
    BroadcastSpatial(Var),
    Mse(Var, Var),
    Mean(Var),
    WeightedSum(Var, Tensor),
}

struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        if cfg!(debug_assertions) && !value.is_finite() {
            let inputs_finite = op.inputs().iter().all(|&v| self.value(v).is_finite());
            assert!(!inputs_finite, "{op:?} produced non-finite output from finite inputs");
        }
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Records an input or parameter.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Which side of its non-differentiable point every ReLU and log clamp
    /// input lies on, in recording order. Two evaluations with equal
    /// signatures lie in the same smooth piece of the function.
    pub fn kink_signature(&self) -> Vec<bool> {
        let mut sig = Vec::new();
        for node in &self.nodes {
            match node.op {
                Op::Relu(x) => sig.extend(self.value(x).data().iter().map(|&v| v > 0.0)),
                Op::LogClamped(x, eps) => {
                    for &v in self.value(x).data() {
                        sig.extend([v > eps, v < 1.0 - eps]);
                    }
                }
                _ => {}
            }
        }
        sig
    }

    pub fn conv2d(&mut self, x: Var, w: Var, b: Var, stride: usize) -> Result<Var> {
        let y = ops::conv2d(self.value(x), self.value(w), self.value(b), stride)?;
        Ok(self.push(y, Op::Conv2d { x, w, b, stride }))
    }

    pub fn conv_transpose2d(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let y = ops::conv_transpose2d(self.value(x), self.value(w), self.value(b))?;
        Ok(self.push(y, Op::ConvTranspose2d { x, w, b }))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let y = ops::relu(self.value(x));
        self.push(y, Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let y = ops::sigmoid(self.value(x));
        self.push(y, Op::Sigmoid(x))
    }

    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let y = ops::linear(self.value(x), self.value(w), self.value(b))?;
        Ok(self.push(y, Op::Linear { x, w, b }))
    }

    pub fn concat_channels(&mut self, a: Var, b: Var) -> Result<Var> {
        let y = ops::concat_channels(self.value(a), self.value(b))?;
        Ok(self.push(y, Op::ConcatChannels(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let y = ops::add(self.value(a), self.value(b))?;
        Ok(self.push(y, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let y = ops::sub(self.value(a), self.value(b))?;
        Ok(self.push(y, Op::Sub(a, b)))
    }

    pub fn scale(&mut self, x: Var, c: f32) -> Var {
        let y = self.value(x).map(|v| v * c);
        self.push(y, Op::Scale(x, c))
    }

    pub fn one_minus(&mut self, x: Var) -> Var {
        let y = self.value(x).map(|v| 1.0 - v);
        self.push(y, Op::OneMinus(x))
    }

    pub fn log_clamped(&mut self, x: Var, eps: f32) -> Var {
        let y = ops::log_clamped(self.value(x), eps);
        self.push(y, Op::LogClamped(x, eps))
    }

    pub fn global_avg_pool(&mut self, x: Var) -> Result<Var> {
        let y = ops::global_avg_pool(self.value(x))?;
        Ok(self.push(y, Op::GlobalAvgPool(x)))
    }

    /// `[b, m] → [b, m, h, w]`.
    pub fn broadcast_spatial(&mut self, x: Var, h: usize, w: usize) -> Result<Var> {
        let y = ops::broadcast_spatial(self.value(x), h, w)?;
        Ok(self.push(y, Op::BroadcastSpatial(x)))
    }

    pub fn mse(&mut self, a: Var, b: Var) -> Result<Var> {
        let y = ops::mse_loss(self.value(a), self.value(b))?;
        Ok(self.push(Tensor::scalar(y), Op::Mse(a, b)))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let y = ops::mean(self.value(x));
        self.push(Tensor::scalar(y), Op::Mean(x))
    }

    /// `Σ x ⊙ weights`, a fixed linear functional of `x`.
    pub fn weighted_sum(&mut self, x: Var, weights: Tensor) -> Result<Var> {
        if weights.shape() != self.value(x).shape() {
            return Err(Error::dim("weighted_sum: weight shape mismatch"));
        }
        let y: f64 = self.value(x).dot(&weights);
        Ok(self.push(Tensor::scalar(y as f32), Op::WeightedSum(x, weights)))
    }

    /// Gradients of the single-element `loss` with respect to every node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).len() != 1 {
            return Err(Error::dim(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::full(self.value(loss).shape(), 1.0));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if matches!(node.op, Op::Leaf) {
                grads[i] = Some(g);
                continue;
            }
            let mut acc = |v: Var, t: Tensor| match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&t),
                slot @ None => *slot = Some(t),
            };
            match &node.op {
                Op::Leaf => {}
                &Op::Conv2d { x, w, b, stride } => {
                    let (dx, dw, db) = ops::conv2d_backward(self.value(x), self.value(w), &g, stride)?;
                    acc(x, dx);
                    acc(w, dw);
                    acc(b, db);
                }
                &Op::ConvTranspose2d { x, w, b } => {
                    let (dx, dw, db) = ops::conv_transpose2d_backward(self.value(x), self.value(w), &g)?;
                    acc(x, dx);
                    acc(w, dw);
                    acc(b, db);
                }
                &Op::Relu(x) => acc(x, ops::relu_backward(self.value(x), &g)),
                &Op::Sigmoid(x) => acc(x, ops::sigmoid_backward(&node.value, &g)),
                &Op::Linear { x, w, b } => {
                    let (dx, dw, db) = ops::linear_backward(self.value(x), self.value(w), &g)?;
                    acc(x, dx);
                    acc(w, dw);
                    acc(b, db);
                }
                &Op::ConcatChannels(a, b) => {
                    let ca = self.value(a).shape()[1];
                    let (ga, gb) = ops::concat_channels_backward(&g, ca)?;
                    acc(a, ga);
                    acc(b, gb);
                }
                &Op::Add(a, b) => {
                    acc(a, g.clone());
                    acc(b, g);
                }
                &Op::Sub(a, b) => {
                    acc(b, g.map(|v| -v));
                    acc(a, g);
                }
                &Op::Scale(x, c) => acc(x, g.map(|v| v * c)),
                &Op::OneMinus(x) => acc(x, g.map(|v| -v)),
                &Op::LogClamped(x, eps) => acc(x, ops::log_clamped_backward(self.value(x), &g, eps)),
                &Op::GlobalAvgPool(x) => {
                    let (_, _, h, w) = self.value(x).dims4()?;
                    acc(x, ops::global_avg_pool_backward(&g, h, w)?);
                }
                &Op::BroadcastSpatial(x) => acc(x, ops::broadcast_spatial_backward(&g)?),
                &Op::Mse(a, b) => {
                    let da = ops::mse_loss_backward(self.value(a), self.value(b), g.item());
                    acc(b, da.map(|v| -v));
                    acc(a, da);
                }
                &Op::Mean(x) => {
                    let n = self.value(x).len() as f32;
                    acc(x, Tensor::full(self.value(x).shape(), g.item() / n));
                }
                Op::WeightedSum(x, weights) => {
                    let s = g.item();
                    acc(*x, weights.map(|v| v * s));
                }
            }
        }

        let shapes = self.nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        Ok(Gradients { grads, shapes })
    }
}

impl Op {
    fn inputs(&self) -> Vec<Var> {
        match *self {
            Op::Leaf => vec![],
            Op::Conv2d { x, w, b, .. } | Op::ConvTranspose2d { x, w, b } | Op::Linear { x, w, b } => {
                vec![x, w, b]
            }
            Op::ConcatChannels(a, b) | Op::Add(a, b) | Op::Sub(a, b) | Op::Mse(a, b) => vec![a, b],
            Op::Relu(x)
            | Op::Sigmoid(x)
            | Op::Scale(x, _)
            | Op::OneMinus(x)
            | Op::LogClamped(x, _)
            | Op::GlobalAvgPool(x)
            | Op::BroadcastSpatial(x)
            | Op::Mean(x)
            | Op::WeightedSum(x, _) => vec![x],
        }
    }
}

/// Result of [`Tape::backward`]. Only leaf gradients are retained.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient for `v`; zeros when `v` did not influence the loss.
    pub fn get(&self, v: Var) -> Tensor {
        self.grads[v.0].clone().unwrap_or_else(|| Tensor::zeros(&self.shapes[v.0]))
    }

    pub fn take(&mut self, v: Var) -> Tensor {
        self.grads[v.0].take().unwrap_or_else(|| Tensor::zeros(&self.shapes[v.0]))
    }
}
