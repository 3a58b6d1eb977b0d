//! Text-to-embedding helper shared by the end-to-end checks.

use dpugc_core::corpus::{build_vocab, corpus_pairs, encode, tokenize, Document, PairConfig, Vocabulary};
use dpugc_core::dp::{train_dp, Checkpoint, DpConfig, TrainingLog};
use dpugc_core::model::{EmbeddingModel, WordEmbedding};

pub struct Trained {
    pub vocab: Vocabulary,
    pub final_model: EmbeddingModel,
    pub log: TrainingLog,
    pub checkpoints: Vec<Checkpoint>,
}

impl Trained {
    pub fn embedding(&self) -> WordEmbedding {
        WordEmbedding::new(self.vocab.clone(), self.final_model.clone()).unwrap()
    }
}

pub fn documents(text: &str, vocab: &Vocabulary) -> Vec<Document> {
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| encode(&tokenize(l, true), vocab)).collect()
}

pub fn vocab_for(text: &str, min_count: u64, max_size: Option<usize>) -> Vocabulary {
    build_vocab(tokenize(text, true), min_count, max_size).unwrap()
}

/// Builds pairs from one-document-per-line text and trains.
pub fn train_text(
    text: &str,
    vocab: &Vocabulary,
    dim: usize,
    pair_seed: u64,
    config: &DpConfig,
    checkpoints: &[u64],
) -> Trained {
    let docs = documents(text, vocab);
    let pairs = corpus_pairs(docs.iter(), vocab, &PairConfig::default(), pair_seed);
    let model = EmbeddingModel::init(vocab.len(), dim, config.seed).unwrap();
    let (final_model, log, checkpoints) = train_dp(model, &pairs, vocab.counts(), config, checkpoints).unwrap();
    Trained { vocab: vocab.clone(), final_model, log, checkpoints }
}
