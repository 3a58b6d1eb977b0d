use alloc::vec::Vec;

use crate::accountant::PrivacyAccountant;
use crate::corpus::TrainingPair;
use crate::model::{
    descend, EmbeddingModel, NegativeSampler, NoiseMode, StepOutcome, StepParams, StepWorkspace, DEFAULT_DISTORTION,
    DEFAULT_NEGATIVES,
};
use crate::rng::{stream, Stream, StreamRng};
use crate::{Error, Result};

use super::poisson_sample;

/// Checkpoint steps used when none are requested.
pub const DEFAULT_CHECKPOINTS: [u64; 9] = [20, 200, 500, 1_000, 5_000, 10_000, 50_000, 90_000, 100_000];

/// Hyper-parameters shared by the plain, DP and personalized trainers.
///
/// Plain training is `noise_multiplier = 0`; the gold model additionally
/// turns `clipping` off.
#[derive(Debug, Clone, PartialEq)]
pub struct DpConfig {
    pub clip_norm: f64,
    pub clipping: bool,
    pub noise_multiplier: f64,
    /// Expected lot size `L`; also the fixed `1/L` gradient scale.
    pub lot_size: usize,
    pub steps: u64,
    pub lr_initial: f64,
    pub lr_final: f64,
    pub target_delta: f64,
    /// ε at which δ-spend is reported.
    pub target_epsilon: f64,
    pub negatives: usize,
    pub distortion: f64,
    pub noise: NoiseMode,
    pub seed: u64,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self {
            clip_norm: 1.0,
            clipping: true,
            noise_multiplier: 1.0,
            lot_size: 1_000,
            steps: 1_000,
            lr_initial: 0.025,
            lr_final: 0.0001,
            target_delta: 1e-5,
            target_epsilon: 0.125,
            negatives: DEFAULT_NEGATIVES,
            distortion: DEFAULT_DISTORTION,
            noise: NoiseMode::Dense,
            seed: 1,
        }
    }
}

impl DpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.clip_norm > 0.0) || !self.clip_norm.is_finite() {
            return bad("clip norm must be positive");
        }
        if !(self.noise_multiplier >= 0.0) || !self.noise_multiplier.is_finite() {
            return bad("noise multiplier must be finite and non-negative");
        }
        if self.noise_multiplier > 0.0 && !self.clipping {
            return bad("noisy training requires clipping");
        }
        if self.lot_size == 0 {
            return bad("lot size must be positive");
        }
        if !(self.target_delta > 0.0 && self.target_delta < 1.0) {
            return bad("target delta must lie in (0, 1)");
        }
        if !(self.target_epsilon >= 0.0) {
            return bad("target epsilon must be non-negative");
        }
        if !(self.lr_initial > 0.0 && self.lr_final > 0.0) || !self.lr_initial.is_finite() || !self.lr_final.is_finite()
        {
            return bad("learning rates must be positive");
        }
        if !(self.distortion >= 0.0) {
            return bad("distortion must be non-negative");
        }
        Ok(())
    }

    pub fn is_private(&self) -> bool {
        self.noise_multiplier > 0.0
    }

    pub(crate) fn step_params(&self, learning_rate: f64, step: u64) -> StepParams {
        StepParams {
            negatives: self.negatives,
            clip_norm: self.clipping.then_some(self.clip_norm),
            noise_multiplier: self.noise_multiplier,
            noise: self.noise,
            denominator: self.lot_size as f64,
            learning_rate,
            step,
        }
    }
}

/// Learning rate for 1-based `step`: linear from `lr_initial` at step 1 to
/// `lr_final` at the last step.
pub fn learning_rate(config: &DpConfig, step: u64) -> f64 {
    if config.steps <= 1 {
        return config.lr_initial;
    }
    let frac = ((step.saturating_sub(1)) as f64 / (config.steps - 1) as f64).min(1.0);
    config.lr_initial * (1.0 - frac) + config.lr_final * frac
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub step: u64,
    /// Mean NEG loss over the lot before the update.
    pub loss: Option<f64>,
    /// ε at the target δ; infinite for noiseless training.
    pub epsilon: f64,
    /// δ at the target ε; 1 for noiseless training.
    pub delta: f64,
    pub lot_size: usize,
    pub sampling_ratio: f64,
    /// Examples eligible for sampling at this step.
    pub valid_examples: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub records: Vec<LogRecord>,
}

impl TrainingLog {
    pub fn last(&self) -> Option<&LogRecord> {
        self.records.last()
    }
}

/// A model snapshot taken after `step` updates.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub step: u64,
    pub model: EmbeddingModel,
    pub epsilon: f64,
    pub delta: f64,
}

/// Spend figures after the current step.
pub(crate) fn current_spend(config: &DpConfig, accountant: &PrivacyAccountant) -> Result<(f64, f64)> {
    if !config.is_private() {
        return Ok((f64::INFINITY, 1.0));
    }
    Ok((accountant.epsilon(config.target_delta)?.value, accountant.delta(config.target_epsilon)?.value))
}

/// Runs the step shared by all trainers for 1-based step `t`.
pub(crate) fn train_step(
    model: &mut EmbeddingModel,
    lot: &[TrainingPair],
    sampler: &NegativeSampler,
    config: &DpConfig,
    t: u64,
    ws: &mut StepWorkspace,
) -> Result<StepOutcome> {
    let params = config.step_params(learning_rate(config, t), t);
    let mut rng = stream(config.seed, Stream::Step, t);
    descend(model, lot, sampler, &params, &mut rng, ws)
}

/// Step-by-step driver for DP (and, with σ = 0, plain) training over a
/// fixed set of examples.
#[derive(Debug)]
pub struct DpTrainer<'a> {
    config: DpConfig,
    pairs: &'a [TrainingPair],
    sampler: NegativeSampler,
    model: EmbeddingModel,
    accountant: PrivacyAccountant,
    lot_rng: StreamRng,
    ws: StepWorkspace,
    step: u64,
    log: TrainingLog,
    lot: Vec<TrainingPair>,
    lot_indices: Vec<usize>,
}

impl<'a> DpTrainer<'a> {
    /// `counts` are the vocabulary counts behind the noise distribution.
    pub fn new(model: EmbeddingModel, pairs: &'a [TrainingPair], counts: &[u64], config: DpConfig) -> Result<Self> {
        config.validate()?;
        if counts.len() != model.vocab_size() {
            return Err(Error::DimensionMismatch { expected: model.vocab_size(), actual: counts.len() });
        }
        if pairs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if config.lot_size > pairs.len() {
            return Err(Error::InvalidConfig(alloc::format!(
                "lot size {} exceeds the {} available examples",
                config.lot_size,
                pairs.len()
            )));
        }
        let sampler = NegativeSampler::new(counts, config.distortion)?;
        let ws = StepWorkspace::new(&model);
        Ok(Self {
            lot_rng: stream(config.seed, Stream::Lots, 0),
            config,
            pairs,
            sampler,
            model,
            accountant: PrivacyAccountant::new(),
            ws,
            step: 0,
            log: TrainingLog::default(),
            lot: Vec::new(),
            lot_indices: Vec::new(),
        })
    }

    pub fn sampling_ratio(&self) -> f64 {
        self.config.lot_size as f64 / self.pairs.len() as f64
    }

    /// Performs the next step and returns its log record.
    pub fn step(&mut self) -> Result<&LogRecord> {
        let t = self.step + 1;
        let q = self.sampling_ratio();
        self.lot_indices = poisson_sample(self.pairs.len(), q, &mut self.lot_rng)?;
        self.lot.clear();
        self.lot.extend(self.lot_indices.iter().map(|&i| self.pairs[i]));
        let outcome = train_step(&mut self.model, &self.lot, &self.sampler, &self.config, t, &mut self.ws)?;
        if self.config.is_private() {
            self.accountant.accumulate(q, self.config.noise_multiplier)?;
        }
        let (epsilon, delta) = current_spend(&self.config, &self.accountant)?;
        self.step = t;
        self.log.records.push(LogRecord {
            step: t,
            loss: outcome.mean_loss,
            epsilon,
            delta,
            lot_size: outcome.examples,
            sampling_ratio: q,
            valid_examples: self.pairs.len(),
        });
        Ok(self.log.records.last().expect("just pushed"))
    }

    pub fn steps_done(&self) -> u64 {
        self.step
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.config.steps
    }

    /// Indices (into the example set) of the last lot.
    pub fn last_lot(&self) -> &[usize] {
        &self.lot_indices
    }

    pub fn model(&self) -> &EmbeddingModel {
        &self.model
    }

    pub fn accountant(&self) -> &PrivacyAccountant {
        &self.accountant
    }

    pub fn log(&self) -> &TrainingLog {
        &self.log
    }

    pub fn config(&self) -> &DpConfig {
        &self.config
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let (epsilon, delta) = self.log.last().map_or((0.0, 0.0), |r| (r.epsilon, r.delta));
        Checkpoint { step: self.step, model: self.model.clone(), epsilon, delta }
    }

    pub fn into_parts(self) -> (EmbeddingModel, TrainingLog, PrivacyAccountant) {
        (self.model, self.log, self.accountant)
    }
}

/// Trains for `config.steps` steps, snapshotting at each listed step.
pub fn train_dp(
    model: EmbeddingModel,
    pairs: &[TrainingPair],
    counts: &[u64],
    config: &DpConfig,
    checkpoints: &[u64],
) -> Result<(EmbeddingModel, TrainingLog, Vec<Checkpoint>)> {
    if config.steps == 0 {
        config.validate()?;
        return Ok((model, TrainingLog::default(), Vec::new()));
    }
    let mut trainer = DpTrainer::new(model, pairs, counts, config.clone())?;
    let mut snaps = Vec::new();
    while !trainer.is_finished() {
        trainer.step()?;
        if checkpoints.contains(&trainer.steps_done()) {
            snaps.push(trainer.checkpoint());
        }
    }
    let (model, log, _) = trainer.into_parts();
    Ok((model, log, snaps))
}
