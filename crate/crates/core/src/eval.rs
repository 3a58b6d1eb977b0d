//! Semantic-drift metrics: how far a model's top-K neighbourhoods have moved
//! away from a gold model's.
//!
//! MAP-Word scores exact overlap with the gold neighbour list. MAP-Char
//! gives partial credit to near-miss spellings: each returned word's
//! relevance is its best character-bigram Dice coefficient against the gold
//! list, and the graded average precision is normalized by the total
//! relevance, which keeps it in [0, 1].

use alloc::string::String;
use alloc::vec::Vec;

use crate::model::WordEmbedding;

/// Query words used when none are supplied: "three", "eight" and "they"
/// plus eight frequent, unambiguous words.
pub const DEFAULT_QUERIES: [&str; 11] =
    ["three", "eight", "they", "one", "he", "new", "first", "war", "city", "world", "year"];

/// Neighbourhood size used when none is supplied.
pub const DEFAULT_TOP_K: usize = 100;

/// Average precision of `returned` against the gold list, normalized by the
/// gold list's length.
pub fn average_precision<S: AsRef<str>, G: AsRef<str>>(returned: &[S], gold: &[G]) -> f64 {
    if gold.is_empty() {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (p, w) in returned.iter().enumerate() {
        if gold.iter().any(|g| g.as_ref() == w.as_ref()) {
            hits += 1;
            sum += hits as f64 / (p + 1) as f64;
        }
    }
    sum / gold.len() as f64
}

fn bigrams(word: &str) -> Vec<(char, char)> {
    let chars: Vec<char> = core::iter::once('^').chain(word.chars()).chain(core::iter::once('$')).collect();
    chars.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Dice coefficient between the bigram multisets of `^a$` and `^b$`.
pub fn bigram_dice(a: &str, b: &str) -> f64 {
    let ba = bigrams(a);
    let mut bb = bigrams(b);
    let total = ba.len() + bb.len();
    let mut overlap = 0usize;
    for g in &ba {
        if let Some(i) = bb.iter().position(|x| x == g) {
            bb.swap_remove(i);
            overlap += 1;
        }
    }
    2.0 * overlap as f64 / total as f64
}

/// Best bigram Dice of `word` against any gold word; 1 for an exact match.
pub fn char_relevance<G: AsRef<str>>(word: &str, gold: &[G]) -> f64 {
    gold.iter().map(|g| if g.as_ref() == word { 1.0 } else { bigram_dice(word, g.as_ref()) }).fold(0.0, f64::max)
}

/// Graded average precision `Σ_p rel_p·(Σ_{j≤p} rel_j)/p / Σ_p rel_p`;
/// zero when every relevance is zero.
pub fn graded_average_precision(relevances: &[f64]) -> f64 {
    let total: f64 = relevances.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut running = 0.0;
    let mut sum = 0.0;
    for (p, &r) in relevances.iter().enumerate() {
        running += r;
        sum += r * running / (p + 1) as f64;
    }
    sum / total
}

pub fn char_average_precision<S: AsRef<str>, G: AsRef<str>>(returned: &[S], gold: &[G]) -> f64 {
    let rel: Vec<f64> = returned.iter().map(|w| char_relevance(w.as_ref(), gold)).collect();
    graded_average_precision(&rel)
}

/// Per-query scores.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryScore {
    pub query: String,
    pub ap_word: f64,
    pub ap_char: f64,
}

/// MAP-Word and MAP-Char of one model against the gold model.
#[derive(Debug, Clone, PartialEq)]
pub struct MapScores {
    pub map_word: f64,
    pub map_char: f64,
    pub per_query: Vec<QueryScore>,
    /// Queries missing from either vocabulary.
    pub skipped: Vec<String>,
}

fn top_words<'a>(emb: &'a WordEmbedding, query: &str, k: usize) -> Option<Vec<&'a str>> {
    emb.nearest(query, k).ok().map(|v| v.into_iter().map(|(w, _)| w).collect())
}

/// Scores `model` against `gold` over `queries` with top-`k` neighbourhoods.
pub fn map_scores<S: AsRef<str>>(model: &WordEmbedding, gold: &WordEmbedding, queries: &[S], k: usize) -> MapScores {
    let mut per_query = Vec::new();
    let mut skipped = Vec::new();
    for q in queries {
        let q = q.as_ref();
        match (top_words(model, q, k), top_words(gold, q, k)) {
            (Some(ret), Some(gold_list)) => per_query.push(QueryScore {
                query: q.into(),
                ap_word: average_precision(&ret, &gold_list),
                ap_char: char_average_precision(&ret, &gold_list),
            }),
            _ => skipped.push(q.into()),
        }
    }
    let n = per_query.len().max(1) as f64;
    MapScores {
        map_word: per_query.iter().map(|s| s.ap_word).sum::<f64>() / n,
        map_char: per_query.iter().map(|s| s.ap_char).sum::<f64>() / n,
        per_query,
        skipped,
    }
}

pub fn map_word<S: AsRef<str>>(model: &WordEmbedding, gold: &WordEmbedding, queries: &[S], k: usize) -> f64 {
    map_scores(model, gold, queries, k).map_word
}

pub fn map_char<S: AsRef<str>>(model: &WordEmbedding, gold: &WordEmbedding, queries: &[S], k: usize) -> f64 {
    map_scores(model, gold, queries, k).map_char
}

/// One model snapshot to evaluate.
#[derive(Debug, Clone, Copy)]
pub struct EvalInput<'a> {
    pub step: u64,
    pub variant: &'a str,
    pub embedding: &'a WordEmbedding,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
}

/// Scores for one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub step: u64,
    pub variant: String,
    pub scores: MapScores,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
}

/// Scores every checkpoint against `gold`, in input order.
pub fn drift_report<S: AsRef<str>>(
    checkpoints: &[EvalInput<'_>],
    gold: &WordEmbedding,
    queries: &[S],
    k: usize,
) -> Vec<EvalReport> {
    checkpoints
        .iter()
        .map(|c| EvalReport {
            step: c.step,
            variant: c.variant.into(),
            scores: map_scores(c.embedding, gold, queries, k),
            epsilon: c.epsilon,
            delta: c.delta,
        })
        .collect()
}
