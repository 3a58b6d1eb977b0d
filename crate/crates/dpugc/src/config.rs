//! Training options: command-line flags, an optional TOML file with the
//! same keys, and the resolved settings recorded in metadata.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use dpugc_core::corpus::{PairConfig, WindowMode, DEFAULT_MIN_COUNT, DEFAULT_WINDOW};
use dpugc_core::dp::{DpConfig, DEFAULT_CHECKPOINTS};
use dpugc_core::model::{NoiseMode, DEFAULT_DISTORTION};
use dpugc_core::personalized::{Budget, ChargeDivisor};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Plain,
    Dp,
    Personalized,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Plain => "plain",
            Mode::Dp => "dp",
            Mode::Personalized => "personalized",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Divisor {
    /// Split each step's spend by the lot size `L`.
    #[default]
    LotSize,
    /// Split by the number of users in the lot (not the published rule).
    UsersInLot,
}

impl From<Divisor> for ChargeDivisor {
    fn from(d: Divisor) -> Self {
        match d {
            Divisor::LotSize => ChargeDivisor::LotSize,
            Divisor::UsersInLot => ChargeDivisor::UsersInLot,
        }
    }
}

/// Flags of `dpugc train`. Every option can also come from `--config`;
/// flags given on the command line win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TrainArgs {
    /// TOML file with flat `flag-name = value` entries.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Plain text corpus; every line is a document.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// `user_id<TAB>text` corpus (required for personalized mode).
    #[arg(long)]
    pub user_corpus: Option<PathBuf>,
    /// Vocabulary file from `build-vocab`; built from the corpus if absent.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    /// Use every context word within the window instead of a random radius.
    #[arg(long)]
    #[serde(default)]
    pub fixed_window: bool,
    /// Frequent-word subsampling threshold.
    #[arg(long)]
    pub subsample: Option<f64>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub clip_norm: Option<f64>,
    /// Disable clipping (noiseless modes only; used for gold models).
    #[arg(long)]
    #[serde(default)]
    pub no_clip: bool,
    /// Noise multiplier σ (dp and personalized modes).
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub lot_size: Option<usize>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub lr_final: Option<f64>,
    /// Target δ at which ε is reported.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Target ε at which δ is reported.
    #[arg(long)]
    pub target_epsilon: Option<f64>,
    /// CSV `user_id,epsilon_budget,delta_budget`.
    #[arg(long)]
    pub budget_file: Option<PathBuf>,
    /// Budget `e,d` for users without an explicit one.
    #[arg(long)]
    pub default_budget: Option<String>,
    #[arg(long, value_enum)]
    pub charge_divisor: Option<Divisor>,
    /// Comma-separated steps at which to write checkpoints.
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Option<Vec<u64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Accepted for scripts; every run is deterministic.
    #[arg(long)]
    #[serde(default)]
    pub deterministic: bool,
    /// Add noise only to touched rows. Faster, but carries NO formal
    /// privacy guarantee.
    #[arg(long)]
    #[serde(default)]
    pub sparse_noise: bool,
    #[arg(long)]
    pub min_count: Option<u64>,
    #[arg(long)]
    pub max_vocab: Option<usize>,
    /// Keep token case (default lowercases).
    #[arg(long)]
    #[serde(default)]
    pub keep_case: bool,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($cli:ident, $file:ident; opt: $($o:ident),*; flag: $($f:ident),*) => {
        TrainArgs {
            config: $cli.config,
            $($o: $cli.$o.or($file.$o),)*
            $($f: $cli.$f || $file.$f,)*
        }
    };
}

impl TrainArgs {
    /// Overlays the command line on the config file, if any.
    pub fn with_config_file(self) -> AppResult<Self> {
        let Some(path) = self.config.clone() else { return Ok(self) };
        let text = crate::error::read_to_string(&path)?;
        let file: TrainArgs = toml::from_str(&text).map_err(|e| AppError::parse(&path, e))?;
        let cli = self;
        Ok(merge_fields!(cli, file;
            opt: corpus, user_corpus, vocab, mode, dim, window, subsample, negatives, clip_norm, sigma, lot_size,
                 steps, lr, lr_final, delta, target_epsilon, budget_file, default_budget, charge_divisor,
                 checkpoints, seed, min_count, max_vocab, out_dir;
            flag: fixed_window, no_clip, deterministic, sparse_noise, keep_case))
    }

    pub fn resolve(&self) -> AppResult<TrainSettings> {
        let mode = self.mode.ok_or_else(|| AppError::usage("--mode is required (plain, dp or personalized)"))?;
        let sigma = match mode {
            Mode::Plain => {
                if self.sigma.is_some_and(|s| s != 0.0) {
                    return Err(AppError::usage("--sigma must be 0 or absent in plain mode"));
                }
                0.0
            }
            _ => self.sigma.unwrap_or(1.0),
        };
        if self.no_clip && sigma > 0.0 {
            return Err(AppError::usage("--no-clip is only allowed without noise"));
        }
        if mode == Mode::Personalized && self.user_corpus.is_none() {
            return Err(AppError::usage("personalized mode requires --user-corpus"));
        }
        if mode != Mode::Personalized && (self.budget_file.is_some() || self.default_budget.is_some()) {
            return Err(AppError::usage("budgets only apply to personalized mode"));
        }
        match (&self.corpus, &self.user_corpus) {
            (None, None) => return Err(AppError::usage("one of --corpus or --user-corpus is required")),
            (Some(_), Some(_)) => return Err(AppError::usage("--corpus and --user-corpus are mutually exclusive")),
            _ => {}
        }
        let d = DpConfig::default();
        let steps = self.steps.unwrap_or(d.steps);
        let default_budget = match &self.default_budget {
            Some(s) => Some(parse_budget(s)?),
            None if mode == Mode::Personalized => Some(Budget::new(1.0, 0.05).unwrap()),
            None => None,
        };
        let checkpoints = match &self.checkpoints {
            Some(list) => {
                let mut list = list.clone();
                list.sort_unstable();
                list.dedup();
                if list.iter().any(|&s| s == 0 || s > steps) {
                    return Err(AppError::usage(format!("checkpoints must lie in 1..={steps}")));
                }
                list
            }
            None => default_checkpoints(steps),
        };
        let settings = TrainSettings {
            mode,
            dim: self.dim.unwrap_or(100),
            window: self.window.unwrap_or(DEFAULT_WINDOW),
            fixed_window: self.fixed_window,
            subsample: self.subsample,
            negatives: self.negatives.unwrap_or(d.negatives),
            distortion: DEFAULT_DISTORTION,
            clip_norm: self.clip_norm.unwrap_or(d.clip_norm),
            clipping: !self.no_clip,
            sigma,
            lot_size: self.lot_size.unwrap_or(d.lot_size),
            steps,
            lr: self.lr.unwrap_or(d.lr_initial),
            lr_final: self.lr_final.unwrap_or(d.lr_final),
            target_delta: self.delta.unwrap_or(d.target_delta),
            target_epsilon: self.target_epsilon.unwrap_or(d.target_epsilon),
            default_budget: default_budget.map(|b| [b.epsilon, b.delta]),
            charge_divisor: (mode == Mode::Personalized).then(|| self.charge_divisor.unwrap_or_default()),
            checkpoints,
            seed: self.seed.unwrap_or(d.seed),
            deterministic: self.deterministic,
            sparse_noise: self.sparse_noise,
            min_count: self.min_count.unwrap_or(DEFAULT_MIN_COUNT),
            max_vocab: self.max_vocab,
            lowercase: !self.keep_case,
        };
        if settings.dim == 0 || settings.window == 0 {
            return Err(AppError::usage("--dim and --window must be positive"));
        }
        settings.dp_config().validate()?;
        Ok(settings)
    }
}

/// Default schedule restricted to the run, plus the last step.
pub fn default_checkpoints(steps: u64) -> Vec<u64> {
    let mut v: Vec<u64> = DEFAULT_CHECKPOINTS.iter().copied().filter(|&s| s <= steps).collect();
    if steps > 0 && v.last() != Some(&steps) {
        v.push(steps);
    }
    v
}

pub fn parse_budget(s: &str) -> AppResult<Budget> {
    let bad = || AppError::usage(format!("budget {s:?} must look like `epsilon,delta`"));
    let (e, d) = s.split_once(',').ok_or_else(bad)?;
    let e: f64 = e.trim().parse().map_err(|_| bad())?;
    let d: f64 = d.trim().parse().map_err(|_| bad())?;
    Budget::new(e, d).map_err(|err| AppError::usage(err.to_string()))
}

/// Fully resolved training settings, as recorded in metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub mode: Mode,
    pub dim: usize,
    pub window: usize,
    pub fixed_window: bool,
    pub subsample: Option<f64>,
    pub negatives: usize,
    pub distortion: f64,
    pub clip_norm: f64,
    pub clipping: bool,
    pub sigma: f64,
    pub lot_size: usize,
    pub steps: u64,
    pub lr: f64,
    pub lr_final: f64,
    pub target_delta: f64,
    pub target_epsilon: f64,
    pub default_budget: Option<[f64; 2]>,
    pub charge_divisor: Option<Divisor>,
    pub checkpoints: Vec<u64>,
    pub seed: u64,
    pub deterministic: bool,
    pub sparse_noise: bool,
    pub min_count: u64,
    pub max_vocab: Option<usize>,
    pub lowercase: bool,
}

impl TrainSettings {
    pub fn dp_config(&self) -> DpConfig {
        DpConfig {
            clip_norm: self.clip_norm,
            clipping: self.clipping,
            noise_multiplier: self.sigma,
            lot_size: self.lot_size,
            steps: self.steps,
            lr_initial: self.lr,
            lr_final: self.lr_final,
            target_delta: self.target_delta,
            target_epsilon: self.target_epsilon,
            negatives: self.negatives,
            distortion: self.distortion,
            noise: if self.sparse_noise { NoiseMode::Sparse } else { NoiseMode::Dense },
            seed: self.seed,
        }
    }

    pub fn pair_config(&self) -> PairConfig {
        PairConfig {
            window: self.window,
            mode: if self.fixed_window { WindowMode::Fixed } else { WindowMode::Dynamic },
            subsample: self.subsample,
        }
    }
}

pub fn out_dir(args: &TrainArgs) -> AppResult<&Path> {
    args.out_dir.as_deref().ok_or_else(|| AppError::usage("--out-dir is required"))
}
