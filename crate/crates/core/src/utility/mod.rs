//! Downstream utility: does adding features from a privately trained
//! embedding help a regression over users?
//!
//! Users are represented by mean-pooled word vectors of their documents.
//! The baseline uses a public embedding only; the comparison concatenates a
//! private embedding (DP or not). Models are fitted with closed-form ridge
//! regression on an 80/20 user-level split and compared by test RMSE.

mod features;
mod ridge;

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::model::WordEmbedding;
use crate::rng::{stream, Stream};
use crate::{Error, Result};

pub use features::{concat_features, user_features, FeatureBlock, FeatureMatrix, LabeledFeatures, PooledFeatures};
pub use ridge::{ridge_fit, RidgeModel};

pub const DEFAULT_RIDGE_LAMBDA: f64 = 1.0;
pub const TRAIN_FRACTION: f64 = 0.8;

/// One user's documents and regression target.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledUser {
    pub user_id: String,
    pub score: f64,
    pub documents: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledUserSet {
    pub users: Vec<LabeledUser>,
}

impl LabeledUserSet {
    pub fn validate(&self) -> Result<()> {
        for u in &self.users {
            if u.documents.is_empty() {
                return Err(Error::InvalidConfig(alloc::format!("user {} has no documents", u.user_id)));
            }
            if !u.score.is_finite() {
                return Err(Error::InvalidConfig(alloc::format!("user {} has a non-finite score", u.user_id)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.score).collect()
    }
}

/// Parses `user_id<TAB>score<TAB>text` lines; repeated user ids add
/// documents and must repeat the same score.
pub fn parse_labeled_users(text: &str) -> Result<LabeledUserSet> {
    let mut set = LabeledUserSet::default();
    let mut index = hashbrown::HashMap::<String, usize>::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: &str| Error::Malformed { line: i + 1, reason: reason.to_string() };
        let mut parts = line.splitn(3, '\t');
        let user = parts.next().filter(|u| !u.is_empty()).ok_or_else(|| malformed("empty user id"))?;
        let score: f64 = parts
            .next()
            .ok_or_else(|| malformed("missing score"))?
            .trim()
            .parse()
            .map_err(|_| malformed("score is not a number"))?;
        let body = parts.next().ok_or_else(|| malformed("missing document text"))?;
        match index.get(user) {
            Some(&u) => {
                if set.users[u].score != score {
                    return Err(malformed("score differs from an earlier line of the same user"));
                }
                set.users[u].documents.push(body.to_string());
            }
            None => {
                index.insert(user.to_string(), set.users.len());
                set.users.push(LabeledUser {
                    user_id: user.to_string(),
                    score,
                    documents: alloc::vec![body.to_string()],
                });
            }
        }
    }
    set.validate()?;
    Ok(set)
}

/// Root mean squared error.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), actual: pred.len() });
    }
    if pred.is_empty() {
        return Err(Error::InvalidConfig("rmse of an empty set".into()));
    }
    let mse = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64;
    Ok(crate::math::sqrt(mse))
}

/// Deterministic user-level split: `(train, test)` index lists.
pub fn train_test_split(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream(seed, Stream::Split, 0));
    let n_train = crate::math::floor(n as f64 * TRAIN_FRACTION) as usize;
    let test = idx.split_off(n_train);
    (idx, test)
}

/// Fits on the train rows and returns test RMSE. Columns are z-scored with
/// training statistics first so that one λ suits every embedding scale.
pub fn fit_and_score(x: &FeatureMatrix, y: &[f64], train: &[usize], test: &[usize], lambda: f64) -> Result<f64> {
    let x_train = x.select_rows(train);
    let x_test = x.select_rows(test);
    let (mean, scale) = x_train.column_stats();
    let x_train = x_train.standardized(&mean, &scale);
    let x_test = x_test.standardized(&mean, &scale);
    let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let y_test: Vec<f64> = test.iter().map(|&i| y[i]).collect();
    let model = ridge_fit(&x_train, &y_train, lambda)?;
    rmse(&model.predict(&x_test), &y_test)
}

/// Test RMSE of the public-only baseline and, when a private embedding is
/// given, of the concatenated features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionResult {
    pub baseline_rmse: f64,
    pub concat_rmse: Option<f64>,
}

pub fn regression_experiment(
    users: &LabeledUserSet,
    public: &WordEmbedding,
    private: Option<&WordEmbedding>,
    split_seed: u64,
    lambda: f64,
    lowercase: bool,
) -> Result<RegressionResult> {
    users.validate()?;
    if users.len() < 10 {
        return Err(Error::InvalidConfig("the regression experiment needs at least 10 users".into()));
    }
    let y = users.scores();
    let (train, test) = train_test_split(users.len(), split_seed);
    let base = concat_features(public, None, users, lowercase).matrix;
    let baseline_rmse = fit_and_score(&base, &y, &train, &test, lambda)?;
    let concat_rmse = match private {
        Some(p) => {
            let both = concat_features(public, Some(p), users, lowercase);
            Some(fit_and_score(&both.matrix, &y, &train, &test, lambda)?)
        }
        None => None,
    };
    Ok(RegressionResult { baseline_rmse, concat_rmse })
}

/// Private models available at one training step.
#[derive(Debug, Clone, Copy)]
pub struct CheckpointModels<'a> {
    pub step: u64,
    pub dp: Option<&'a WordEmbedding>,
    pub nonedp: Option<&'a WordEmbedding>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
}

/// One row of the utility table.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionRow {
    pub step: u64,
    pub baseline_rmse: f64,
    pub dp_rmse: Option<f64>,
    pub nonedp_rmse: Option<f64>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
}

/// Baseline / DP / non-DP RMSE per checkpoint, all on the same split.
pub fn regression_table(
    users: &LabeledUserSet,
    public: &WordEmbedding,
    checkpoints: &[CheckpointModels<'_>],
    split_seed: u64,
    lambda: f64,
    lowercase: bool,
) -> Result<Vec<RegressionRow>> {
    let baseline_rmse = regression_experiment(users, public, None, split_seed, lambda, lowercase)?.baseline_rmse;
    let run = |m: Option<&WordEmbedding>| -> Result<Option<f64>> {
        match m {
            Some(m) => Ok(regression_experiment(users, public, Some(m), split_seed, lambda, lowercase)?.concat_rmse),
            None => Ok(None),
        }
    };
    let mut rows = Vec::with_capacity(checkpoints.len());
    for c in checkpoints {
        rows.push(RegressionRow {
            step: c.step,
            baseline_rmse,
            dp_rmse: run(c.dp)?,
            nonedp_rmse: run(c.nonedp)?,
            epsilon: c.epsilon,
            delta: c.delta,
        });
    }
    Ok(rows)
}
