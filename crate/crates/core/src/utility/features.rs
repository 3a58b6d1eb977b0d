use alloc::vec;
use alloc::vec::Vec;

use super::LabeledUserSet;
use crate::corpus::tokenize;
use crate::model::WordEmbedding;

/// Mean-pooled input vectors of a user's in-vocabulary tokens.
///
/// UNK and out-of-vocabulary tokens are skipped; `tokens == 0` means the
/// vector is all zeros and the caller should warn.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledFeatures {
    pub vector: Vec<f64>,
    pub tokens: usize,
}

pub fn user_features<S: AsRef<str>>(documents: &[S], embedding: &WordEmbedding, lowercase: bool) -> PooledFeatures {
    let k = embedding.dim();
    let unk = embedding.vocab.unk_id();
    let mut sum = vec![0.0; k];
    let mut tokens = 0usize;
    for doc in documents {
        for tok in tokenize(doc.as_ref(), lowercase) {
            let Some(id) = embedding.vocab.id(&tok) else { continue };
            if id == unk {
                continue;
            }
            for (s, v) in sum.iter_mut().zip(embedding.model.input_row(id)) {
                *s += v;
            }
            tokens += 1;
        }
    }
    if tokens > 0 {
        let n = tokens as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    PooledFeatures { vector: sum, tokens }
}

/// Which embedding a contiguous run of columns came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureBlock {
    Public { dim: usize },
    Private { dim: usize },
}

impl FeatureBlock {
    pub fn dim(self) -> usize {
        match self {
            FeatureBlock::Public { dim } | FeatureBlock::Private { dim } => dim,
        }
    }
}

/// Row-major `rows × cols` feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    pub layout: Vec<FeatureBlock>,
    /// Row indices whose user had no usable tokens in some block.
    pub empty_rows: Vec<usize>,
}

impl FeatureMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged feature rows");
        FeatureMatrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
            layout: vec![FeatureBlock::Public { dim: cols }],
            empty_rows: Vec::new(),
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix { rows: idx.len(), cols: self.cols, data, layout: self.layout.clone(), empty_rows: Vec::new() }
    }

    /// Column means and standard deviations; constant columns get scale 1.
    pub fn column_stats(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.rows.max(1) as f64;
        let mut mean = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (m, x) in mean.iter_mut().zip(self.row(i)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; self.cols];
        for i in 0..self.rows {
            for ((v, x), m) in var.iter_mut().zip(self.row(i)).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .iter()
            .map(|v| {
                let s = crate::math::sqrt(v / n);
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        (mean, scale)
    }

    pub fn standardized(&self, mean: &[f64], scale: &[f64]) -> Self {
        let mut out = self.clone();
        for row in out.data.chunks_mut(self.cols.max(1)) {
            for ((x, m), s) in row.iter_mut().zip(mean).zip(scale) {
                *x = (*x - m) / s;
            }
        }
        out
    }
}

/// One row per user: `[public ‖ private]`, or just public features when no
/// private embedding is given.
pub fn concat_features(
    public: &WordEmbedding,
    private: Option<&WordEmbedding>,
    users: &LabeledUserSet,
    lowercase: bool,
) -> LabeledFeatures {
    let k_pub = public.dim();
    let k_priv = private.map_or(0, WordEmbedding::dim);
    let cols = k_pub + k_priv;
    let mut data = Vec::with_capacity(users.len() * cols);
    let mut empty_rows = Vec::new();
    for (i, u) in users.users.iter().enumerate() {
        let p = user_features(&u.documents, public, lowercase);
        let mut empty = p.tokens == 0;
        data.extend_from_slice(&p.vector);
        if let Some(m) = private {
            let q = user_features(&u.documents, m, lowercase);
            empty |= q.tokens == 0;
            data.extend_from_slice(&q.vector);
        }
        if empty {
            empty_rows.push(i);
        }
    }
    let mut layout = vec![FeatureBlock::Public { dim: k_pub }];
    if private.is_some() {
        layout.push(FeatureBlock::Private { dim: k_priv });
    }
    LabeledFeatures {
        matrix: FeatureMatrix { rows: users.len(), cols, data, layout, empty_rows },
        targets: users.scores(),
    }
}

/// Features together with the regression targets, row-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatures {
    pub matrix: FeatureMatrix,
    pub targets: Vec<f64>,
}
