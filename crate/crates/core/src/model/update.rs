//! One descent step over a lot of pairs: per-example gradients, optional
//! clipping, optional Gaussian noise, then `θ ← θ − η·(Σ g + noise)/L`.
//!
//! The plain baseline, DP-SGD and the personalized trainer all go through
//! [`descend`], so a noiseless DP step and a clipped plain step perform the
//! same floating-point operations in the same order.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::corpus::TrainingPair;
use crate::rng::{stream, Stream};
use crate::{Error, Result};

use super::gradient::{neg_gradient_with_loss, Matrix, SparseGradient};
use super::sampler::{sample_negatives_into, NegativeSampler};
use super::EmbeddingModel;

/// Rows per independently seeded noise chunk. Fixed so that the noise does
/// not depend on how chunks are scheduled.
const NOISE_CHUNK_ROWS: usize = 256;

/// Where Gaussian noise is added when the noise multiplier is positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    /// Every coordinate of both matrices. Required for the DP guarantee.
    #[default]
    Dense,
    /// Only rows touched by the lot. Faster, but the set of noised rows
    /// reveals which words were in the lot: no formal guarantee.
    Sparse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepParams {
    pub negatives: usize,
    /// Per-example clipping bound; `None` trains unclipped.
    pub clip_norm: Option<f64>,
    pub noise_multiplier: f64,
    pub noise: NoiseMode,
    /// The `L` in `1/L`; the configured lot size for DP steps.
    pub denominator: f64,
    pub learning_rate: f64,
    /// Reported in errors.
    pub step: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepOutcome {
    pub examples: usize,
    /// Mean pre-update NEG loss over the lot; `None` for an empty lot.
    pub mean_loss: Option<f64>,
    /// Largest per-example gradient norm before clipping.
    pub max_grad_norm: f64,
}

/// Reusable dense gradient accumulators.
#[derive(Debug, Clone)]
pub struct StepWorkspace {
    dim: usize,
    grad: [Vec<f64>; 2],
    touched: [Vec<u32>; 2],
    marked: [Vec<bool>; 2],
    negatives: Vec<u32>,
}

impl StepWorkspace {
    pub fn new(model: &EmbeddingModel) -> Self {
        let n = model.vocab_size() * model.dim();
        let v = model.vocab_size();
        Self {
            dim: model.dim(),
            grad: [vec![0.0; n], vec![0.0; n]],
            touched: [Vec::new(), Vec::new()],
            marked: [vec![false; v], vec![false; v]],
            negatives: Vec::new(),
        }
    }

    fn fits(&self, model: &EmbeddingModel) -> bool {
        self.dim == model.dim() && self.marked[0].len() == model.vocab_size()
    }

    fn add(&mut self, g: &SparseGradient) {
        let dim = self.dim;
        for ((matrix, id), vals) in g.iter() {
            let m = slot(matrix);
            if !self.marked[m][id as usize] {
                self.marked[m][id as usize] = true;
                self.touched[m].push(id);
            }
            let row = &mut self.grad[m][id as usize * dim..(id as usize + 1) * dim];
            for (r, v) in row.iter_mut().zip(vals) {
                *r += v;
            }
        }
    }

    fn touched_finite(&self) -> bool {
        let dim = self.dim;
        (0..2).all(|m| {
            self.touched[m]
                .iter()
                .all(|&id| self.grad[m][id as usize * dim..(id as usize + 1) * dim].iter().all(|x| x.is_finite()))
        })
    }

    fn reset(&mut self) {
        let dim = self.dim;
        for m in 0..2 {
            for &id in &self.touched[m] {
                self.grad[m][id as usize * dim..(id as usize + 1) * dim].fill(0.0);
                self.marked[m][id as usize] = false;
            }
            self.touched[m].clear();
        }
    }
}

#[inline]
fn slot(m: Matrix) -> usize {
    match m {
        Matrix::Input => 0,
        Matrix::Output => 1,
    }
}

fn example_gradient(
    model: &EmbeddingModel,
    pair: TrainingPair,
    negatives: &[u32],
    clip_norm: Option<f64>,
) -> (SparseGradient, f64, f64) {
    let (mut g, loss) = neg_gradient_with_loss(model, pair, negatives);
    let norm = match clip_norm {
        Some(c) => {
            let n = g.clip(c);
            debug_assert!(g.norm() <= c * (1.0 + 1e-12), "post-clip norm above bound");
            n
        }
        None => g.norm(),
    };
    (g, loss, norm)
}

/// Applies one step to `model`. Negatives are drawn from `rng` first, in
/// lot order; the noise seed (if any) is drawn afterwards.
pub fn descend<R: RngCore + ?Sized>(
    model: &mut EmbeddingModel,
    lot: &[TrainingPair],
    sampler: &NegativeSampler,
    params: &StepParams,
    rng: &mut R,
    ws: &mut StepWorkspace,
) -> Result<StepOutcome> {
    if !(params.learning_rate >= 0.0) || !params.learning_rate.is_finite() {
        return Err(Error::InvalidConfig("learning rate must be finite and non-negative".into()));
    }
    if !(params.denominator > 0.0) {
        return Err(Error::InvalidConfig("lot-size denominator must be positive".into()));
    }
    if params.noise_multiplier < 0.0 || !params.noise_multiplier.is_finite() {
        return Err(Error::InvalidConfig("noise multiplier must be finite and non-negative".into()));
    }
    if params.noise_multiplier > 0.0 && params.clip_norm.is_none() {
        return Err(Error::InvalidConfig("noisy steps require a clipping norm".into()));
    }
    if !ws.fits(model) {
        *ws = StepWorkspace::new(model);
    }

    let m = params.negatives;
    ws.negatives.clear();
    for pair in lot {
        sample_negatives_into(sampler, m, pair.context, rng, &mut ws.negatives)?;
    }

    let mut loss_sum = 0.0;
    let mut max_norm: f64 = 0.0;
    let negatives = core::mem::take(&mut ws.negatives);
    let per_example = |i: usize| example_gradient(model, lot[i], &negatives[i * m..(i + 1) * m], params.clip_norm);

    #[cfg(feature = "parallel")]
    let parallel = rayon::current_num_threads() > 1 && lot.len() >= 256;
    #[cfg(not(feature = "parallel"))]
    let parallel = false;

    if parallel {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let grads: Vec<_> = (0..lot.len()).into_par_iter().map(per_example).collect();
            // fixed-order reduction
            for (g, loss, n) in &grads {
                ws.add(g);
                loss_sum += loss;
                max_norm = max_norm.max(*n);
            }
        }
    } else {
        for i in 0..lot.len() {
            let (g, loss, n) = per_example(i);
            ws.add(&g);
            loss_sum += loss;
            max_norm = max_norm.max(n);
        }
    }
    ws.negatives = negatives;

    if !ws.touched_finite() {
        ws.reset();
        return Err(Error::NumericalBlowUp { step: params.step });
    }

    let scale = params.learning_rate / params.denominator;
    let dim = model.dim();
    if params.noise_multiplier > 0.0 {
        let std = params.noise_multiplier * params.clip_norm.unwrap_or(0.0);
        let noise_seed = rng.next_u64();
        match params.noise {
            NoiseMode::Dense => apply_dense_noise(model, ws, scale, std, noise_seed),
            NoiseMode::Sparse => {
                let mut nrng = stream(noise_seed, Stream::Noise, 0);
                let (input, output) = model.matrices_mut();
                for (mi, params_m) in [input, output].into_iter().enumerate() {
                    for &id in &ws.touched[mi] {
                        let r = id as usize * dim..(id as usize + 1) * dim;
                        for (p, g) in params_m[r.clone()].iter_mut().zip(&ws.grad[mi][r]) {
                            let z: f64 = nrng.sample(StandardNormal);
                            *p -= scale * (g + std * z);
                        }
                    }
                }
            }
        }
    } else {
        let (input, output) = model.matrices_mut();
        for (mi, params_m) in [input, output].into_iter().enumerate() {
            for &id in &ws.touched[mi] {
                let r = id as usize * dim..(id as usize + 1) * dim;
                for (p, g) in params_m[r.clone()].iter_mut().zip(&ws.grad[mi][r]) {
                    *p -= scale * g;
                }
            }
        }
    }
    ws.reset();

    let examples = lot.len();
    Ok(StepOutcome {
        examples,
        mean_loss: if examples == 0 { None } else { Some(loss_sum / examples as f64) },
        max_grad_norm: max_norm,
    })
}

fn noise_chunk(params: &mut [f64], grad: &[f64], scale: f64, std: f64, seed: u64, chunk: u64) {
    let mut rng = stream(seed, Stream::Noise, chunk);
    for (p, g) in params.iter_mut().zip(grad) {
        let z: f64 = rng.sample(StandardNormal);
        *p -= scale * (g + std * z);
    }
}

fn apply_dense_noise(model: &mut EmbeddingModel, ws: &StepWorkspace, scale: f64, std: f64, seed: u64) {
    let chunk_len = NOISE_CHUNK_ROWS * model.dim();
    let chunks_per_matrix = model.vocab_size().div_ceil(NOISE_CHUNK_ROWS) as u64;
    let (input, output) = model.matrices_mut();
    for (mi, params_m) in [input, output].into_iter().enumerate() {
        let base = mi as u64 * chunks_per_matrix;
        let grad = &ws.grad[mi];

        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if rayon::current_num_threads() > 1 {
                params_m
                    .par_chunks_mut(chunk_len)
                    .zip(grad.par_chunks(chunk_len))
                    .enumerate()
                    .for_each(|(c, (p, g))| noise_chunk(p, g, scale, std, seed, base + c as u64));
                continue;
            }
        }
        for (c, (p, g)) in params_m.chunks_mut(chunk_len).zip(grad.chunks(chunk_len)).enumerate() {
            noise_chunk(p, g, scale, std, seed, base + c as u64);
        }
    }
}

/// Clipped (or unclipped, with `clip_norm = None`) minibatch SGD over
/// `pairs`, averaging by `|pairs|`. No noise, no accounting.
pub fn sgd_step<R: RngCore + ?Sized>(
    model: &mut EmbeddingModel,
    pairs: &[TrainingPair],
    sampler: &NegativeSampler,
    negatives: usize,
    learning_rate: f64,
    clip_norm: Option<f64>,
    rng: &mut R,
) -> Result<StepOutcome> {
    if pairs.is_empty() {
        return Ok(StepOutcome::default());
    }
    let params = StepParams {
        negatives,
        clip_norm,
        noise_multiplier: 0.0,
        noise: NoiseMode::Dense,
        denominator: pairs.len() as f64,
        learning_rate,
        step: 0,
    };
    let mut ws = StepWorkspace::new(model);
    descend(model, pairs, sampler, &params, rng, &mut ws)
}
