use std::path::PathBuf;

use clap::Args;

use dpugc_core::corpus::{build_vocab as build, Vocabulary, DEFAULT_MIN_COUNT};

use super::corpus_tokens;
use crate::error::{read_to_string, write_file, AppError, AppResult};
use crate::formats::write_vocab;

#[derive(Debug, Clone, Args)]
pub struct VocabArgs {
    #[arg(long, conflicts_with = "user_corpus", required_unless_present = "user_corpus")]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub user_corpus: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MIN_COUNT)]
    pub min_count: u64,
    #[arg(long)]
    pub max_vocab: Option<usize>,
    #[arg(long)]
    pub keep_case: bool,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn build_vocab(args: &VocabArgs) -> AppResult<Vocabulary> {
    let (path, user) = match (&args.corpus, &args.user_corpus) {
        (Some(p), _) => (p, false),
        (None, Some(p)) => (p, true),
        (None, None) => return Err(AppError::usage("one of --corpus or --user-corpus is required")),
    };
    let text = read_to_string(path)?;
    let tokens = corpus_tokens(&text, user, !args.keep_case, path)?;
    let vocab = build(tokens, args.min_count, args.max_vocab)
        .map_err(|source| AppError::Format { path: path.clone(), source })?;
    write_file(&args.out, write_vocab(&vocab).as_bytes())?;
    Ok(vocab)
}
