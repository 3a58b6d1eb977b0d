use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;

use dpugc_core::model::WordEmbedding;
use dpugc_core::utility::{
    concat_features, parse_labeled_users, regression_table, CheckpointModels, RegressionRow, DEFAULT_RIDGE_LAMBDA,
};

use super::load_model;
use crate::error::{read_to_string, write_file, AppError, AppResult};
use crate::formats::regression_csv;
use crate::metadata::{load_for_model, RunMetadata};

#[derive(Debug, Clone, Args)]
pub struct RegressArgs {
    /// TSV `user_id<TAB>score<TAB>text`.
    #[arg(long)]
    pub labeled_users: PathBuf,
    #[arg(long)]
    pub public_model: PathBuf,
    /// DP checkpoint(s), matched to non-DP ones by step.
    #[arg(long = "dp-model")]
    pub dp_models: Vec<PathBuf>,
    #[arg(long = "nonedp-model")]
    pub nonedp_models: Vec<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub split_seed: u64,
    #[arg(long, default_value_t = DEFAULT_RIDGE_LAMBDA)]
    pub lambda: f64,
    #[arg(long)]
    pub keep_case: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub struct RegressOutput {
    pub rows: Vec<RegressionRow>,
    pub csv: String,
    pub warnings: Vec<String>,
}

type Loaded = (RunMetadata, WordEmbedding);

fn load_all(paths: &[PathBuf]) -> AppResult<BTreeMap<u64, Loaded>> {
    let mut out = BTreeMap::new();
    for p in paths {
        let meta = load_for_model(p)?;
        let step = meta.step;
        if out.insert(step, (meta, load_model(p)?)).is_some() {
            return Err(AppError::usage(format!("two models for step {step}")));
        }
    }
    Ok(out)
}

pub fn regress(args: &RegressArgs) -> AppResult<RegressOutput> {
    if args.lambda.is_nan() || args.lambda < 0.0 {
        return Err(AppError::usage("--lambda must be non-negative"));
    }
    let text = read_to_string(&args.labeled_users)?;
    let users =
        parse_labeled_users(&text).map_err(|source| AppError::Format { path: args.labeled_users.clone(), source })?;
    let public = load_model(&args.public_model)?;
    let dp = load_all(&args.dp_models)?;
    let nonedp = load_all(&args.nonedp_models)?;
    let lowercase = !args.keep_case;

    let mut warnings = Vec::new();
    let empty = concat_features(&public, None, &users, lowercase).matrix.empty_rows.len();
    if empty > 0 {
        warnings.push(format!("{empty} users have no token in the public vocabulary; their features are zero"));
    }

    let mut steps: Vec<u64> = dp.keys().chain(nonedp.keys()).copied().collect();
    steps.sort_unstable();
    steps.dedup();
    if steps.is_empty() {
        steps.push(0);
    }
    let checkpoints: Vec<CheckpointModels<'_>> = steps
        .iter()
        .map(|s| {
            let d = dp.get(s);
            CheckpointModels {
                step: *s,
                dp: d.map(|(_, e)| e),
                nonedp: nonedp.get(s).map(|(_, e)| e),
                epsilon: d.map(|(m, _)| m.epsilon_or_inf()),
                delta: d.map(|(m, _)| m.privacy.delta),
            }
        })
        .collect();
    let rows = regression_table(&users, &public, &checkpoints, args.split_seed, args.lambda, lowercase)?;
    let csv = regression_csv(&rows);
    if let Some(p) = &args.out {
        write_file(p, csv.as_bytes())?;
    }
    Ok(RegressOutput { rows, csv, warnings })
}
