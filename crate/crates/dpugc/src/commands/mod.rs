//! Subcommand implementations. Each returns what it wrote so callers (and
//! tests) can inspect it; `main` only prints summaries.

mod eval;
mod query;
mod regress;
mod synth;
mod train;
mod vocab;

use std::path::Path;

use dpugc_core::corpus::{encode, parse_user_corpus, tokenize, Document, UserCorpus, Vocabulary};
use dpugc_core::model::WordEmbedding;

pub use eval::{eval, EvalArgs};
pub use query::{query, QueryArgs};
pub use regress::{regress, RegressArgs};
pub use synth::{synth, SynthArgs, SynthKind};
pub use train::{train, TrainSummary};
pub use vocab::{build_vocab, VocabArgs};

use crate::error::{read_to_string, AppError, AppResult};
use crate::formats::read_word2vec;

/// Tokens of a plain corpus or of the document column of a user corpus.
pub(crate) fn corpus_tokens(text: &str, user_corpus: bool, lowercase: bool, path: &Path) -> AppResult<Vec<String>> {
    if !user_corpus {
        return Ok(tokenize(text, lowercase));
    }
    let records = dpugc_core::corpus::parse_user_records(text)
        .map_err(|source| AppError::Format { path: path.into(), source })?;
    Ok(records.into_iter().flat_map(|(_, _, body)| tokenize(body, lowercase)).collect())
}

/// One document per non-blank line.
pub(crate) fn plain_documents(text: &str, vocab: &Vocabulary, lowercase: bool) -> Vec<Document> {
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| encode(&tokenize(l, lowercase), vocab)).collect()
}

pub(crate) fn user_documents(text: &str, vocab: &Vocabulary, lowercase: bool, path: &Path) -> AppResult<UserCorpus> {
    parse_user_corpus(text, vocab, lowercase).map_err(|source| AppError::Format { path: path.into(), source })
}

pub(crate) fn load_model(path: &Path) -> AppResult<WordEmbedding> {
    read_word2vec(&read_to_string(path)?).map_err(|source| AppError::Format { path: path.into(), source })
}

pub(crate) fn create_dir(path: &Path) -> AppResult<()> {
    std::fs::create_dir_all(path).map_err(|source| AppError::Output { path: path.into(), source })
}
