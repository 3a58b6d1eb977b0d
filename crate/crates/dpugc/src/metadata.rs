//! Metadata stored next to every model file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Mode, TrainSettings};
use crate::error::{AppError, AppResult};

pub const SCHEMA_VERSION: u32 = 1;
/// Field left out of reproducibility comparisons.
pub const TIMESTAMP_FIELD: &str = "created_unix";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl Fingerprint {
    pub fn of(path: &Path, contents: &[u8]) -> Self {
        Self {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(contents)),
            bytes: contents.len() as u64,
        }
    }
}

/// Privacy statement attached to a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyStatement {
    /// What the guarantee covers: `none`, `example` or `user-personalized`.
    pub unit: String,
    /// ε at `target_delta`; `null` when unbounded.
    pub epsilon: Option<f64>,
    /// δ at `target_epsilon`.
    pub delta: f64,
    pub target_delta: f64,
    pub target_epsilon: f64,
    pub accountant: String,
    /// Set when noise was only added to touched rows.
    pub sparse_noise_no_guarantee: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub mode: Mode,
    /// Step at which this model was written.
    pub step: u64,
    pub seed: u64,
    pub config: TrainSettings,
    pub corpus: Fingerprint,
    pub budget_file: Option<Fingerprint>,
    pub vocab_size: usize,
    pub dim: usize,
    pub examples: usize,
    pub checkpoints: Vec<u64>,
    pub privacy: PrivacyStatement,
    pub spend_file: Option<String>,
    /// Set when every user's budget ran out before the last step.
    pub stopped_early_at_step: Option<u64>,
    pub created_unix: u64,
}

impl RunMetadata {
    pub fn epsilon_or_inf(&self) -> f64 {
        self.privacy.epsilon.unwrap_or(f64::INFINITY)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metadata serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> AppResult<Self> {
        serde_json::from_str(text).map_err(|e| AppError::parse(path, e))
    }
}

/// `model.txt` → `model.json`.
pub fn metadata_path(model: &Path) -> PathBuf {
    model.with_extension("json")
}

pub fn load_for_model(model: &Path) -> AppResult<RunMetadata> {
    let path = metadata_path(model);
    if !path.exists() {
        return Err(AppError::usage(format!(
            "{} has no metadata file ({}); refusing to evaluate a model without its privacy statement",
            model.display(),
            path.display()
        )));
    }
    RunMetadata::from_json(&crate::error::read_to_string(&path)?, &path)
}

pub fn now_unix() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Removes the timestamp so two metadata files can be compared.
pub fn without_timestamp(json: &str) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(json).unwrap_or(serde_json::Value::Null);
    if let Some(obj) = v.as_object_mut() {
        obj.remove(TIMESTAMP_FIELD);
    }
    v
}
