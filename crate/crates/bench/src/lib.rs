//! Synthetic inputs for the benchmarks.

use detext_core::features::{build_vocabulary, tokenize, VocabConfig};
use detext_core::{SparseVector, Vocabulary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ten", "ra", "vos", "ne", "dil", "shu", "por", "ex", "ba", "qua", "fen", "ti", "gro",
];

fn word(rank: usize) -> String {
    let mut r = rank;
    let mut w = String::new();
    loop {
        w.push_str(SYLLABLES[r % SYLLABLES.len()]);
        r /= SYLLABLES.len();
        if r == 0 {
            break;
        }
    }
    w
}

/// `n` sentences of 10 to 60 words drawn from a skewed vocabulary of `vocab` words.
pub fn sentences(n: usize, vocab: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.random_range(10..=60);
            (0..len)
                .map(|_| {
                    let u: f64 = rng.random();
                    word(((vocab as f64).powf(u) as usize).min(vocab - 1))
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

/// Vocabulary fitted on `docs` plus their TF-IDF vectors.
pub fn featurize(docs: &[String]) -> (Vocabulary, Vec<SparseVector>) {
    let tokens: Vec<Vec<String>> = docs.iter().map(|d| tokenize(d, true)).collect();
    let vocab = build_vocabulary(&tokens, VocabConfig::default()).expect("non-empty corpus");
    let vectors = vocab.transform_all(docs);
    (vocab, vectors)
}

/// Two-class problem: the second class draws from a shifted vocabulary.
pub fn labelled(n: usize, seed: u64) -> (Vec<SparseVector>, Vec<i8>) {
    let mut docs = sentences(n / 2, 400, seed);
    docs.extend(
        sentences(n - n / 2, 400, seed ^ 1)
            .into_iter()
            .map(|s| s.split(' ').map(|w| format!("{w}x")).take(40).collect::<Vec<_>>().join(" ")),
    );
    let labels = (0..n).map(|i| if i < n / 2 { -1 } else { 1 }).collect();
    (featurize(&docs).1, labels)
}

/// Uniform scores for `n` positives and `n` negatives, with ties.
pub fn scores(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |shift: f64| -> Vec<f64> {
        (0..n).map(|_| ((rng.random::<f64>() + shift) * 1000.0).round() / 1000.0).collect()
    };
    (draw(0.2), draw(0.0))
}
