//! Negative-sampling loss and its analytic gradient.
//!
//! For a pair `(w_I, w_O)` with negatives `n_1..n_M`, writing `v = W[w_I]`
//! and `u_j = W_out[j]`:
//!
//! ```text
//! L = -log σ(u_O·v) - Σ_i log σ(-u_{n_i}·v)
//! ```
//!
//! The logistic σ stands in for `p(d = 1 | w, w_I)`. Logits are clamped to
//! `±LOGIT_CLAMP` before exponentiation.

use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::TrainingPair;
use crate::math::{dot, exp, softplus, sqrt};

use super::EmbeddingModel;

pub const LOGIT_CLAMP: f64 = 30.0;

/// Which parameter matrix a gradient row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Matrix {
    Input,
    Output,
}

/// Gradient restricted to the rows one example touches.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGradient {
    dim: usize,
    rows: Vec<(Matrix, u32)>,
    values: Vec<f64>,
}

impl SparseGradient {
    pub fn new(dim: usize) -> Self {
        Self { dim, rows: Vec::new(), values: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row accumulator for `(matrix, id)`, created zeroed on first use.
    pub fn row_mut(&mut self, matrix: Matrix, id: u32) -> &mut [f64] {
        let slot = match self.rows.iter().position(|&r| r == (matrix, id)) {
            Some(i) => i,
            None => {
                self.rows.push((matrix, id));
                self.values.extend(core::iter::repeat_n(0.0, self.dim));
                self.rows.len() - 1
            }
        };
        &mut self.values[slot * self.dim..(slot + 1) * self.dim]
    }

    pub fn get(&self, matrix: Matrix, id: u32) -> Option<&[f64]> {
        self.rows.iter().position(|&r| r == (matrix, id)).map(|i| &self.values[i * self.dim..(i + 1) * self.dim])
    }

    pub fn rows(&self) -> &[(Matrix, u32)] {
        &self.rows
    }

    pub fn iter(&self) -> impl Iterator<Item = ((Matrix, u32), &[f64])> {
        self.rows.iter().copied().zip(self.values.chunks_exact(self.dim.max(1)))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// 2-norm over every touched coordinate jointly.
    pub fn norm(&self) -> f64 {
        sqrt(dot(&self.values, &self.values))
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    /// Rescales to norm at most `clip_norm`; returns the pre-clip norm.
    pub fn clip(&mut self, clip_norm: f64) -> f64 {
        let n = self.norm();
        if n > clip_norm {
            self.scale(clip_norm / n);
        }
        n
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[inline]
fn clamp_logit(x: f64) -> f64 {
    x.clamp(-LOGIT_CLAMP, LOGIT_CLAMP)
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// NEG loss of one pair; never negative.
pub fn neg_loss(model: &EmbeddingModel, pair: TrainingPair, negatives: &[u32]) -> f64 {
    let v = model.input_row(pair.center);
    let mut loss = softplus(-clamp_logit(dot(model.output_row(pair.context), v)));
    for &n in negatives {
        loss += softplus(clamp_logit(dot(model.output_row(n), v)));
    }
    loss
}

/// Analytic gradient of [`neg_loss`] with respect to the touched rows, plus
/// the loss itself (computed from the same dot products).
pub(crate) fn neg_gradient_with_loss(
    model: &EmbeddingModel,
    pair: TrainingPair,
    negatives: &[u32],
) -> (SparseGradient, f64) {
    let dim = model.dim();
    let v = model.input_row(pair.center);
    let mut grad = SparseGradient::new(dim);
    let mut center_grad = vec![0.0; dim];

    let x = clamp_logit(dot(model.output_row(pair.context), v));
    let mut loss = softplus(-x);
    // dL/dx for the positive term is -σ(-x)
    let coeff = -sigmoid(-x);
    accumulate(&mut center_grad, coeff, model.output_row(pair.context));
    accumulate(grad.row_mut(Matrix::Output, pair.context), coeff, v);

    for &n in negatives {
        let x = clamp_logit(dot(model.output_row(n), v));
        loss += softplus(x);
        let coeff = sigmoid(x);
        accumulate(&mut center_grad, coeff, model.output_row(n));
        accumulate(grad.row_mut(Matrix::Output, n), coeff, v);
    }
    grad.row_mut(Matrix::Input, pair.center).copy_from_slice(&center_grad);
    (grad, loss)
}

pub fn neg_gradient(model: &EmbeddingModel, pair: TrainingPair, negatives: &[u32]) -> SparseGradient {
    neg_gradient_with_loss(model, pair, negatives).0
}

#[inline]
fn accumulate(dst: &mut [f64], coeff: f64, src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += coeff * s;
    }
}
