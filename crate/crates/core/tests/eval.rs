mod support;

use dpugc_core::eval::{average_precision, char_average_precision, map_scores};
use dpugc_core::model::{nearest_ids, EmbeddingModel};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{checks, oracles};

#[test]
fn map_oracle_criterion() {
    let v = checks::map_oracle();
    assert!(v.pass, "{}", v.detail);
}

#[test]
fn nearest_matches_full_sort() {
    for seed in 0..20 {
        let m = EmbeddingModel::init(200, 12, seed).unwrap();
        for q in [1u32, 7, 150, 199] {
            let got: Vec<u32> = nearest_ids(&m, q, 25).into_iter().map(|(id, _)| id).collect();
            assert_eq!(got, oracles::brute_nearest(&m, q, 25), "seed {seed} query {q}");
        }
    }
}

#[test]
fn random_rankings_follow_null_expectation() {
    let (k, n, trials) = (100usize, 10_000usize, 4_000usize);
    let words: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
    let gold: Vec<&str> = words[..k].iter().map(String::as_str).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pool: Vec<&str> = words.iter().map(String::as_str).collect();
    let mut total = 0.0;
    for _ in 0..trials {
        let (picked, _) = pool.partial_shuffle(&mut rng, k);
        total += average_precision(picked, &gold);
    }
    let mean = total / trials as f64;
    let want = oracles::null_expected_ap(k, n);
    assert!((mean - want).abs() < 0.15 * want, "simulated {mean} vs analytic {want}");
    assert!(want < 1e-3);
}

#[test]
fn char_ap_reduces_to_word_ap_on_exact_hits() {
    let gold = ["alpha", "beta", "gamma"];
    assert_eq!(char_average_precision(&["beta", "gamma", "alpha"], &gold), 1.0);
    assert_eq!(average_precision(&["beta", "gamma", "alpha"], &gold), 1.0);
    let partial = ["beta", "zzzzzzz", "alpha"];
    let word = average_precision(&partial, &gold);
    let char_ap = char_average_precision(&partial, &gold);
    // graded AP normalises by hits, word AP by the gold size
    assert!((char_ap * 2.0 / 3.0 - word).abs() < 1e-12);
}

#[test]
fn char_scores_stay_in_unit_interval() {
    let e = checks_embedding();
    let s = map_scores(&e.0, &e.1, &["three", "he", "war"], 30);
    assert!((0.0..=1.0).contains(&s.map_char) && (0.0..=1.0).contains(&s.map_word));
}

fn checks_embedding() -> (dpugc_core::model::WordEmbedding, dpugc_core::model::WordEmbedding) {
    let words: Vec<String> = ["<unk>", "three", "he", "war", "there", "that", "theirs", "warm", "hex"]
        .iter()
        .map(|s| s.to_string())
        .chain((0..60).map(|i| format!("x{i}")))
        .collect();
    let counts = (0..words.len() as u64).map(|i| 100 - i).collect();
    let vocab = dpugc_core::corpus::Vocabulary::from_parts(words, counts, 1).unwrap();
    let a = EmbeddingModel::init(vocab.len(), 6, 1).unwrap();
    let b = EmbeddingModel::init(vocab.len(), 6, 2).unwrap();
    (
        dpugc_core::model::WordEmbedding::new(vocab.clone(), a).unwrap(),
        dpugc_core::model::WordEmbedding::new(vocab, b).unwrap(),
    )
}
