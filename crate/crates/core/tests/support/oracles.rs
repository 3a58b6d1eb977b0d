//! Reference implementations written without reusing library internals.

use dpugc_core::corpus::TrainingPair;
use dpugc_core::model::{EmbeddingModel, Matrix};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// NEG loss computed directly: `−ln σ(u_o·v_c) − Σ ln σ(−u_n·v_c)`.
pub fn neg_loss(model: &EmbeddingModel, pair: TrainingPair, negatives: &[u32]) -> f64 {
    let v = model.input_row(pair.center);
    let mut loss = -sigmoid(dot(model.output_row(pair.context), v)).ln();
    for &n in negatives {
        loss -= sigmoid(-dot(model.output_row(n), v)).ln();
    }
    loss
}

/// Central finite-difference gradient of [`neg_loss`] over every parameter,
/// laid out as `[input ‖ output]`.
pub fn fd_gradient(model: &EmbeddingModel, pair: TrainingPair, negatives: &[u32], h: f64) -> Vec<f64> {
    let (v, k) = (model.vocab_size(), model.dim());
    let mut grad = vec![0.0; 2 * v * k];
    let mut m = model.clone();
    for (mi, matrix) in [Matrix::Input, Matrix::Output].into_iter().enumerate() {
        for id in 0..v as u32 {
            for j in 0..k {
                let orig = m.row(matrix, id)[j];
                m.row_mut(matrix, id)[j] = orig + h;
                let up = neg_loss(&m, pair, negatives);
                m.row_mut(matrix, id)[j] = orig - h;
                let down = neg_loss(&m, pair, negatives);
                m.row_mut(matrix, id)[j] = orig;
                grad[mi * v * k + id as usize * k + j] = (up - down) / (2.0 * h);
            }
        }
    }
    grad
}

/// Simpson's rule over `[a, b]` with an even number of panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// RDP of the sampled Gaussian by direct integration of
/// `E_{z∼N(0,σ²)}[(1 − q + q·N(z;1,σ²)/N(z;0,σ²))^α]` in linear space.
pub fn brute_rdp(order: f64, q: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    let density =
        |z: f64, mu: f64| (-(z - mu) * (z - mu) / (2.0 * s2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let integrand = |z: f64| {
        let p0 = density(z, 0.0);
        if p0 == 0.0 {
            return 0.0;
        }
        let ratio = density(z, 1.0) / p0;
        p0 * (1.0 - q + q * ratio).powf(order)
    };
    let lo = -20.0 * sigma;
    let hi = order + 20.0 * sigma;
    let a = simpson(integrand, lo, hi, ((hi - lo) / 0.002) as usize);
    a.ln() / (order - 1.0)
}

/// ε after `steps` compositions, minimised over a fine order grid
/// `1.05, 1.10, ..., max_order`.
pub fn brute_epsilon(q: f64, sigma: f64, steps: u64, delta: f64, max_order: f64) -> (f64, f64) {
    let mut best = (f64::INFINITY, 0.0);
    let mut a = 1.05;
    while a <= max_order + 1e-9 {
        let eps = steps as f64 * brute_rdp(a, q, sigma) + (1.0 / delta).ln() / (a - 1.0);
        if eps < best.0 {
            best = (eps, a);
        }
        a += 0.05;
    }
    best
}

/// Minimum of `α/2σ² + ln(1/δ)/(α − 1)` over a fine grid on `(1, 100]`.
pub fn full_batch_grid_search(sigma: f64, delta: f64) -> (f64, f64) {
    let mut best = (f64::INFINITY, 0.0);
    for i in 1..=990_000 {
        let a = 1.0 + i as f64 * 1e-4;
        let v = a / (2.0 * sigma * sigma) + (1.0 / delta).ln() / (a - 1.0);
        if v < best.0 {
            best = (v, a);
        }
    }
    best
}

/// Average precision by explicit prefix recounting.
pub fn brute_ap(returned: &[&str], gold: &[&str]) -> f64 {
    if gold.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for p in 0..returned.len() {
        if gold.contains(&returned[p]) {
            let hits = returned[..=p].iter().filter(|w| gold.contains(w)).count();
            total += hits as f64 / (p + 1) as f64;
        }
    }
    total / gold.len() as f64
}

/// Expected AP of a uniformly random top-`k` list against a gold list of
/// `k` words drawn from `n` candidates.
pub fn null_expected_ap(k: usize, n: usize) -> f64 {
    let (kf, nf) = (k as f64, n as f64);
    (1..=k).map(|p| (kf / nf) * (1.0 + (p as f64 - 1.0) * (kf - 1.0) / (nf - 1.0)) / p as f64).sum::<f64>() / kf
}

/// Top-`k` neighbours by cosine, via a full sort.
pub fn brute_nearest(model: &EmbeddingModel, query: u32, k: usize) -> Vec<u32> {
    let q = model.input_row(query);
    let qn = dot(q, q).sqrt();
    let mut scored: Vec<(f64, u32)> = (1..model.vocab_size() as u32)
        .filter(|&id| id != query)
        .map(|id| {
            let r = model.input_row(id);
            let d = qn * dot(r, r).sqrt();
            (if d == 0.0 { 0.0 } else { dot(q, r) / d }, id)
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|(_, id)| id).collect()
}

/// Mean of in-vocabulary, non-UNK token vectors, accumulated one token at a
/// time.
pub fn naive_features(docs: &[String], vocab: &dpugc_core::corpus::Vocabulary, model: &EmbeddingModel) -> Vec<f64> {
    let mut acc = vec![0.0; model.dim()];
    let mut n = 0usize;
    for d in docs {
        for t in d.split_whitespace() {
            let t = t.to_lowercase();
            if let Some(id) = vocab.id(&t) {
                if id == 0 {
                    continue;
                }
                for (a, v) in acc.iter_mut().zip(model.input_row(id)) {
                    *a += v;
                }
                n += 1;
            }
        }
    }
    if n > 0 {
        for a in &mut acc {
            *a /= n as f64;
        }
    }
    acc
}
