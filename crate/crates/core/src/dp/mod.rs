//! Record-level DP-SGD: clipping, Poisson lots, noisy steps, training loop.

mod sampling;
mod train;

use rand::RngCore;

use crate::accountant::PrivacyAccountant;
use crate::corpus::TrainingPair;
use crate::model::{descend, EmbeddingModel, NegativeSampler, SparseGradient, StepOutcome, StepWorkspace};
use crate::{Error, Result};

pub use sampling::poisson_sample;
pub(crate) use train::{current_spend, train_step};
pub use train::{
    learning_rate, train_dp, Checkpoint, DpConfig, DpTrainer, LogRecord, TrainingLog, DEFAULT_CHECKPOINTS,
};

/// Returns `g · min(1, C/‖g‖₂)`, the norm taken over all touched
/// coordinates together.
pub fn clip_gradient(g: &SparseGradient, clip_norm: f64) -> Result<SparseGradient> {
    if !(clip_norm > 0.0) {
        return Err(Error::InvalidConfig("clip norm must be positive".into()));
    }
    let mut out = g.clone();
    out.clip(clip_norm);
    Ok(out)
}

/// One DP-SGD step on an already sampled lot: clip each example, sum, add
/// `N(0, σ²C²)` to every coordinate, scale by `1/L` with the configured `L`,
/// descend, then charge `accountant` once with `(q, σ)`.
///
/// With `σ = 0` nothing is charged (the step is not private) and the update
/// equals [`crate::model::sgd_step`] on the same lot when `|lot| = L`.
#[allow(clippy::too_many_arguments)]
pub fn dp_sgd_step<R: RngCore + ?Sized>(
    model: &mut EmbeddingModel,
    lot: &[TrainingPair],
    sampler: &NegativeSampler,
    config: &DpConfig,
    sampling_ratio: f64,
    learning_rate: f64,
    accountant: &mut PrivacyAccountant,
    rng: &mut R,
) -> Result<StepOutcome> {
    config.validate()?;
    let params = config.step_params(learning_rate, accountant.steps_charged() + 1);
    let mut ws = StepWorkspace::new(model);
    let outcome = descend(model, lot, sampler, &params, rng, &mut ws)?;
    if config.noise_multiplier > 0.0 {
        accountant.accumulate(sampling_ratio, config.noise_multiplier)?;
    }
    Ok(outcome)
}
