use std::fmt::Write as _;

use dpugc_core::corpus::{Vocabulary, UNK_TOKEN};
use dpugc_core::model::{EmbeddingModel, WordEmbedding};
use dpugc_core::{Error, Result};

use super::fmt_f64;

/// Serialises the input vectors as `|V| k` followed by `word v1 .. vk`
/// lines, in id order (so `<unk>` comes first).
pub fn write_word2vec(emb: &WordEmbedding) -> String {
    let (v, k) = (emb.model.vocab_size(), emb.model.dim());
    let mut out = String::with_capacity(v * (k * 12 + 16));
    writeln!(out, "{v} {k}").unwrap();
    for (id, word) in emb.vocab.words().iter().enumerate() {
        out.push_str(word);
        for x in emb.model.input_row(id as u32) {
            out.push(' ');
            out.push_str(&fmt_f64(*x));
        }
        out.push('\n');
    }
    out
}

/// Parses a word2vec text model. Files without a `<unk>` row (written by
/// other tools) get a zero row prepended. Counts are unknown and set to 0.
pub fn read_word2vec(text: &str) -> Result<WordEmbedding> {
    let malformed = |line: usize, reason: String| Error::Malformed { line, reason };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::EmptyCorpus)?;
    let mut h = header.split_whitespace();
    let parse_dim = |s: Option<&str>| s.and_then(|s| s.parse::<usize>().ok());
    let (v, k) = match (parse_dim(h.next()), parse_dim(h.next()), h.next()) {
        (Some(v), Some(k), None) if k > 0 => (v, k),
        _ => return Err(malformed(1, "header must be `<vocab size> <dimension>`".into())),
    };
    let mut words = Vec::with_capacity(v + 1);
    let mut input = Vec::with_capacity((v + 1) * k);
    for (i, line) in lines {
        let mut parts = line.split_whitespace();
        let word = parts.next().unwrap();
        let before = input.len();
        for p in parts {
            let x: f64 = p.parse().map_err(|_| malformed(i + 1, format!("bad number {p:?}")))?;
            input.push(x);
        }
        if input.len() - before != k {
            return Err(malformed(i + 1, format!("expected {k} values, found {}", input.len() - before)));
        }
        words.push(word.to_string());
    }
    if words.len() != v {
        return Err(malformed(1, format!("header promises {v} words, file has {}", words.len())));
    }
    if words.first().map(String::as_str) != Some(UNK_TOKEN) {
        if words.iter().any(|w| w == UNK_TOKEN) {
            return Err(malformed(1, format!("{UNK_TOKEN} must be the first row")));
        }
        words.insert(0, UNK_TOKEN.to_string());
        input.splice(0..0, std::iter::repeat_n(0.0, k));
    }
    let n = words.len();
    let vocab = Vocabulary::from_parts(words, vec![0; n], 0)?;
    let model = EmbeddingModel::from_input(n, k, input)?;
    WordEmbedding::new(vocab, model)
}
