//! Skip-gram model state, the negative-sampling objective, and queries.

mod gradient;
mod neighbors;
mod sampler;
mod update;

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::corpus::Vocabulary;
use crate::rng::{stream, Stream};
use crate::{Error, Result};

pub use gradient::{neg_gradient, neg_loss, Matrix, SparseGradient, LOGIT_CLAMP};
pub use neighbors::{cosine, nearest_ids, nearest_neighbors};
pub use sampler::{sample_negatives, NegativeSampler, DEFAULT_DISTORTION};
pub use update::{descend, sgd_step, NoiseMode, StepOutcome, StepParams, StepWorkspace};

pub const DEFAULT_NEGATIVES: usize = 5;

/// Input (embedding) and output (context) matrices, both `vocab_size × dim`,
/// stored row-major. Row `i` belongs to vocabulary id `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    vocab_size: usize,
    dim: usize,
    input: Vec<f64>,
    output: Vec<f64>,
}

impl EmbeddingModel {
    /// Input rows uniform in `[-0.5/dim, 0.5/dim)`, output rows zero.
    pub fn init(vocab_size: usize, dim: usize, seed: u64) -> Result<Self> {
        if vocab_size == 0 || dim == 0 {
            return Err(Error::InvalidConfig("vocabulary size and dimension must be positive".into()));
        }
        let mut rng = stream(seed, Stream::Init, 0);
        let scale = 1.0 / dim as f64;
        let input = (0..vocab_size * dim).map(|_| (rng.random::<f64>() - 0.5) * scale).collect();
        Ok(Self { vocab_size, dim, input, output: vec![0.0; vocab_size * dim] })
    }

    pub fn zeros(vocab_size: usize, dim: usize) -> Self {
        Self { vocab_size, dim, input: vec![0.0; vocab_size * dim], output: vec![0.0; vocab_size * dim] }
    }

    /// Model with the given input rows and a zero output matrix, e.g. one
    /// loaded from a word-vector file.
    pub fn from_input(vocab_size: usize, dim: usize, input: Vec<f64>) -> Result<Self> {
        if input.len() != vocab_size * dim {
            return Err(Error::DimensionMismatch { expected: vocab_size * dim, actual: input.len() });
        }
        Ok(Self { vocab_size, dim, input, output: vec![0.0; vocab_size * dim] })
    }

    pub fn from_parts(vocab_size: usize, dim: usize, input: Vec<f64>, output: Vec<f64>) -> Result<Self> {
        if output.len() != vocab_size * dim {
            return Err(Error::DimensionMismatch { expected: vocab_size * dim, actual: output.len() });
        }
        let mut m = Self::from_input(vocab_size, dim, input)?;
        m.output = output;
        Ok(m)
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of trainable coordinates (both matrices).
    pub fn num_parameters(&self) -> usize {
        2 * self.vocab_size * self.dim
    }

    pub fn input_row(&self, id: u32) -> &[f64] {
        let s = id as usize * self.dim;
        &self.input[s..s + self.dim]
    }

    pub fn output_row(&self, id: u32) -> &[f64] {
        let s = id as usize * self.dim;
        &self.output[s..s + self.dim]
    }

    pub fn input_row_mut(&mut self, id: u32) -> &mut [f64] {
        let s = id as usize * self.dim;
        &mut self.input[s..s + self.dim]
    }

    pub fn output_row_mut(&mut self, id: u32) -> &mut [f64] {
        let s = id as usize * self.dim;
        &mut self.output[s..s + self.dim]
    }

    pub fn row(&self, matrix: Matrix, id: u32) -> &[f64] {
        match matrix {
            Matrix::Input => self.input_row(id),
            Matrix::Output => self.output_row(id),
        }
    }

    pub fn row_mut(&mut self, matrix: Matrix, id: u32) -> &mut [f64] {
        match matrix {
            Matrix::Input => self.input_row_mut(id),
            Matrix::Output => self.output_row_mut(id),
        }
    }

    pub fn input(&self) -> &[f64] {
        &self.input
    }

    pub fn output(&self) -> &[f64] {
        &self.output
    }

    pub(crate) fn matrices_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.input, &mut self.output)
    }

    pub fn is_finite(&self) -> bool {
        self.input.iter().chain(&self.output).all(|x| x.is_finite())
    }
}

/// A vocabulary together with the model trained over it.
#[derive(Debug, Clone, PartialEq)]
pub struct WordEmbedding {
    pub vocab: Vocabulary,
    pub model: EmbeddingModel,
}

impl WordEmbedding {
    pub fn new(vocab: Vocabulary, model: EmbeddingModel) -> Result<Self> {
        if vocab.len() != model.vocab_size() {
            return Err(Error::DimensionMismatch { expected: vocab.len(), actual: model.vocab_size() });
        }
        Ok(Self { vocab, model })
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.vocab.id(word).map(|id| self.model.input_row(id))
    }

    pub fn nearest(&self, word: &str, k: usize) -> Result<Vec<(&str, f64)>> {
        nearest_neighbors(&self.model, &self.vocab, word, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = EmbeddingModel::init(10, 5, 42).unwrap();
        let b = EmbeddingModel::init(10, 5, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.input().iter().zip(b.input()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(a.input().iter().all(|x| x.abs() <= 0.5 / 5.0));
        assert!(a.output().iter().all(|&x| x == 0.0));
        assert_ne!(a, EmbeddingModel::init(10, 5, 43).unwrap());
    }

    #[test]
    fn init_rejects_empty_shapes() {
        assert!(EmbeddingModel::init(0, 5, 1).is_err());
        assert!(EmbeddingModel::init(3, 0, 1).is_err());
    }
}
