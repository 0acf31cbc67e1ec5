//! Synthetic corpora and helpers for driving the binary.
#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output, Stdio};

use detext_core::corpus::DEFAULT_RANGES;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const VOCAB_SIZE: usize = 5000;
pub const ZIPF_EXPONENT: f64 = 1.0;

const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// A pronounceable, unique token for a frequency rank.
pub fn word(rank: usize) -> String {
    let mut n = rank;
    let mut out = String::new();
    loop {
        let syl = n % 60;
        out.push_str(ONSETS[syl / 5]);
        out.push_str(VOWELS[syl % 5]);
        n /= 60;
        if n == 0 {
            break;
        }
    }
    out
}

/// Zipf distribution over ranks `0..VOCAB_SIZE`.
pub struct Zipf {
    pub pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl Zipf {
    pub fn new() -> Self {
        let weights: Vec<f64> = (1..=VOCAB_SIZE).map(|r| (r as f64).powf(-ZIPF_EXPONENT)).collect();
        let total: f64 = weights.iter().sum();
        let pmf: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let cdf = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Zipf { pmf, cdf }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c < u).min(VOCAB_SIZE - 1)
    }
}

/// `n` sentences cycling through the default length ranges, with a uniform
/// length inside each range and Zipf-distributed words.
pub fn human_sentences(n: usize, seed: u64) -> Vec<String> {
    let zipf = Zipf::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let (lo, hi) = DEFAULT_RANGES[i % DEFAULT_RANGES.len()];
            let len = rng.random_range(lo..=hi);
            (0..len).map(|_| word(zipf.sample(&mut rng))).collect::<Vec<_>>().join(" ")
        })
        .collect()
}

/// Substitution words for the mock: a block of mid-frequency ranks.
pub fn shifted_wordlist(shift: usize, size: usize) -> Vec<usize> {
    (shift..shift + size).collect()
}

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_detext"))
}

/// Runs the binary and returns its output, panicking with stderr on failure.
pub fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).stdin(Stdio::null()).output().expect("binary runs");
    assert!(
        out.status.success(),
        "detext {args:?} failed with {:?}:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).stdin(Stdio::null()).output().expect("binary runs")
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}
