use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seed::{derive_seed, fnv1a};

use super::{Backend, BackendError, BackendKind, RephraseRequest};

pub const DEFAULT_REPLACE_FRACTION: f64 = 0.3;

pub const DEFAULT_WORDLIST: &[&str] = &[
    "indeed", "notably", "overall", "essentially", "moreover", "additionally", "significantly", "furthermore",
    "various", "numerous", "particular", "specific", "crucial", "essential", "comprehensive", "relevant",
    "individuals", "aspects", "approach", "process", "context", "key", "ensure", "provide", "utilize",
    "highlight", "demonstrate", "consider", "however", "therefore", "ultimately", "typically",
];

/// Offline stand-in for the chat endpoint: shuffles the sentence's words and
/// swaps a fixed fraction of positions for wordlist entries. Output depends
/// only on the seed and the sentence, and always has the input's word count.
#[derive(Clone, Debug)]
pub struct MockBackend {
    seed: u64,
    wordlist: Vec<String>,
    replace_fraction: f64,
}

impl MockBackend {
    pub fn new(seed: u64) -> Self {
        MockBackend {
            seed,
            wordlist: DEFAULT_WORDLIST.iter().map(|w| w.to_string()).collect(),
            replace_fraction: DEFAULT_REPLACE_FRACTION,
        }
    }

    /// Replaces the substitution wordlist. Entries must be single
    /// whitespace-free tokens.
    pub fn with_wordlist(mut self, words: Vec<String>) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::Config("mock wordlist is empty".into()));
        }
        if let Some(w) = words.iter().find(|w| w.is_empty() || w.chars().any(char::is_whitespace)) {
            return Err(Error::Config(format!("mock wordlist entry {w:?} is not a single word")));
        }
        self.wordlist = words;
        Ok(self)
    }

    pub fn with_replace_fraction(mut self, fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::Config(format!("replace fraction {fraction} outside [0, 1]")));
        }
        self.replace_fraction = fraction;
        Ok(self)
    }

    /// Parses a wordlist file: whitespace-separated words, `#` starts a comment line.
    pub fn parse_wordlist(text: &str) -> Vec<String> {
        text.lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .flat_map(str::split_whitespace)
            .map(str::to_string)
            .collect()
    }

    pub fn rephrase(&self, sentence: &str) -> String {
        mock_backend(sentence, self.seed, &self.wordlist, self.replace_fraction)
    }
}

impl Backend for MockBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }

    fn complete(&self, request: &RephraseRequest) -> std::result::Result<String, BackendError> {
        Ok(self.rephrase(&request.sentence))
    }
}

pub(crate) fn mock_backend<S: AsRef<str>>(sentence: &str, seed: u64, wordlist: &[S], replace_fraction: f64) -> String {
    let mut words: Vec<&str> = sentence.split_whitespace().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, fnv1a(sentence.as_bytes())));
    words.shuffle(&mut rng);
    let n = words.len();
    let k = ((n as f64) * replace_fraction).round() as usize;
    for pos in index::sample(&mut rng, n, k.min(n)) {
        words[pos] = wordlist[rng.random_range(0..wordlist.len())].as_ref();
    }
    words.join(" ")
}
