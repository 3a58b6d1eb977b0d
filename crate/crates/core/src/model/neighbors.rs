use alloc::vec::Vec;

use crate::corpus::{Vocabulary, UNK_ID};
use crate::math::{dot, norm};
use crate::{Error, Result};

use super::EmbeddingModel;

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let d = norm(a) * norm(b);
    if d == 0.0 {
        0.0
    } else {
        dot(a, b) / d
    }
}

/// Top-`k` ids by cosine over input rows, skipping `query` and UNK. Ties
/// go to the smaller id.
pub fn nearest_ids(model: &EmbeddingModel, query: u32, k: usize) -> Vec<(u32, f64)> {
    let q = model.input_row(query);
    let qn = norm(q);
    let mut scored: Vec<(u32, f64)> = (0..model.vocab_size() as u32)
        .filter(|&id| id != query && id != UNK_ID)
        .map(|id| {
            let row = model.input_row(id);
            let d = qn * norm(row);
            (id, if d == 0.0 { 0.0 } else { dot(q, row) / d })
        })
        .collect();
    let by_rank = |a: &(u32, f64), b: &(u32, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if k < scored.len() {
        scored.select_nth_unstable_by(k, by_rank);
        scored.truncate(k);
    }
    scored.sort_unstable_by(by_rank);
    scored
}

/// Ranked `(word, cosine)` neighbours of `query`.
pub fn nearest_neighbors<'v>(
    model: &EmbeddingModel,
    vocab: &'v Vocabulary,
    query: &str,
    k: usize,
) -> Result<Vec<(&'v str, f64)>> {
    let id = vocab.id(query).ok_or_else(|| Error::UnknownWord(query.into()))?;
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    Ok(nearest_ids(model, id, k).into_iter().map(|(i, c)| (vocab.word(i), c)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use alloc::string::{String, ToString};
    use alloc::vec;

    fn vocab(n: usize) -> Vocabulary {
        let mut words = vec!["<unk>".to_string()];
        words.extend((1..n).map(|i| alloc::format!("w{i}")));
        Vocabulary::from_parts(words, vec![1; n], 1).unwrap()
    }

    #[test]
    fn identical_rows_are_rank_one() {
        let mut m = EmbeddingModel::zeros(4, 2);
        m.input_row_mut(1).copy_from_slice(&[1.0, 2.0]);
        m.input_row_mut(2).copy_from_slice(&[1.0, 2.0]);
        m.input_row_mut(3).copy_from_slice(&[-1.0, 0.5]);
        let v = vocab(4);
        let nn = nearest_neighbors(&m, &v, "w1", 2).unwrap();
        assert_eq!(nn[0].0, "w2");
        assert!((nn[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_rows_tie_break_by_id() {
        let mut m = EmbeddingModel::zeros(5, 4);
        for i in 1..5u32 {
            m.input_row_mut(i)[i as usize - 1] = 1.0;
        }
        // UNK row identical to the query must still be skipped
        m.input_row_mut(0)[0] = 1.0;
        let ids: Vec<u32> = nearest_ids(&m, 1, 3).into_iter().map(|x| x.0).collect();
        assert_eq!(ids, vec![2, 3, 4]);
        assert!(nearest_ids(&m, 1, 3).iter().all(|x| x.1 == 0.0));
    }

    #[test]
    fn unknown_word_errors() {
        let m = EmbeddingModel::zeros(3, 2);
        let v = vocab(3);
        let e = nearest_neighbors(&m, &v, "nope", 1).unwrap_err();
        assert_eq!(e, Error::UnknownWord(String::from("nope")));
    }
}
