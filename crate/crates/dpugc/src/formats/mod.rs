//! On-disk formats: word2vec text models, vocabulary files and CSV tables.

mod tables;
mod vocab;
mod word2vec;

pub use tables::{
    eval_csv, fmt_f64, per_query_csv, read_budgets, regression_csv, spend_csv, training_log_csv, LogFlavor,
};
pub use vocab::{read_vocab, write_vocab, VOCAB_MAGIC};
pub use word2vec::{read_word2vec, write_word2vec};
