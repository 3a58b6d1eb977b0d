use std::path::PathBuf;

use clap::Args;

use super::load_model;
use crate::error::{AppError, AppResult};
use crate::formats::fmt_f64;

#[derive(Debug, Clone, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub word: String,
    #[arg(long, default_value_t = 10)]
    pub topk: usize,
}

/// `word<TAB>cosine` lines, most similar first.
pub fn query(args: &QueryArgs) -> AppResult<String> {
    let emb = load_model(&args.model)?;
    let hits = emb.nearest(&args.word, args.topk).map_err(|e| match e {
        dpugc_core::Error::UnknownWord(w) => AppError::usage(format!("{w:?} is not in the model vocabulary")),
        other => AppError::Core(other),
    })?;
    Ok(hits.iter().map(|(w, c)| format!("{w}\t{}\n", fmt_f64(*c))).collect())
}
