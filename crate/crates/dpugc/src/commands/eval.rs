use std::path::PathBuf;

use clap::Args;

use dpugc_core::eval::{drift_report, EvalInput, EvalReport, DEFAULT_QUERIES, DEFAULT_TOP_K};

use super::load_model;
use crate::error::{read_to_string, write_file, AppError, AppResult};
use crate::formats::{eval_csv, per_query_csv};
use crate::metadata::load_for_model;

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Reference model; needs no metadata.
    #[arg(long)]
    pub gold: PathBuf,
    /// Checkpoint to score (repeatable); each needs its metadata file.
    #[arg(long = "model", required = true)]
    pub models: Vec<PathBuf>,
    /// Query file, one word per line (default: the eleven standard queries).
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub topk: usize,
    /// Plot-data CSV; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional per-query AP breakdown.
    #[arg(long)]
    pub per_query: Option<PathBuf>,
}

pub struct EvalOutput {
    pub reports: Vec<EvalReport>,
    pub csv: String,
    pub warnings: Vec<String>,
}

pub fn eval(args: &EvalArgs) -> AppResult<EvalOutput> {
    if args.topk == 0 {
        return Err(AppError::usage("--topk must be positive"));
    }
    let queries: Vec<String> = match &args.queries {
        Some(p) => read_to_string(p)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect(),
        None => DEFAULT_QUERIES.iter().map(|s| s.to_string()).collect(),
    };
    if queries.is_empty() {
        return Err(AppError::usage("the query list is empty"));
    }
    let gold = load_model(&args.gold)?;
    let mut loaded = Vec::with_capacity(args.models.len());
    for path in &args.models {
        let meta = load_for_model(path)?;
        loaded.push((meta, load_model(path)?));
    }
    let inputs: Vec<EvalInput<'_>> = loaded
        .iter()
        .map(|(meta, emb)| EvalInput {
            step: meta.step,
            variant: meta.mode.as_str(),
            embedding: emb,
            epsilon: Some(meta.epsilon_or_inf()),
            delta: Some(meta.privacy.delta),
        })
        .collect();
    let reports = drift_report(&inputs, &gold, &queries, args.topk);
    let mut warnings = Vec::new();
    if let Some(r) = reports.first() {
        if !r.scores.skipped.is_empty() {
            warnings.push(format!("queries missing from a vocabulary were skipped: {}", r.scores.skipped.join(", ")));
        }
    }
    let csv = eval_csv(&reports);
    if let Some(p) = &args.out {
        write_file(p, csv.as_bytes())?;
    }
    if let Some(p) = &args.per_query {
        write_file(p, per_query_csv(&reports).as_bytes())?;
    }
    Ok(EvalOutput { reports, csv, warnings })
}
