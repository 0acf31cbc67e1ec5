//! TF-IDF features: tokenization, vocabulary fitting, and L2-normalized
//! sparse vectors.

mod sparse;

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};

pub use sparse::SparseVector;

/// Lowercases (when asked), then extracts maximal runs of Unicode
/// alphanumeric characters.
pub fn tokenize(text: &str, lowercase: bool) -> Vec<String> {
    let split = |s: &str| -> Vec<String> {
        s.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_owned)
            .collect()
    };
    if lowercase {
        split(&text.to_lowercase())
    } else {
        split(text)
    }
}

/// Smoothed inverse document frequency, `ln((1 + n) / (1 + df)) + 1`.
pub fn compute_idf(df: usize, n_docs: usize) -> Result<f64> {
    if df < 1 || df > n_docs {
        return Err(Error::Domain(format!(
            "document frequency {df} outside 1..={n_docs}"
        )));
    }
    Ok(((1 + n_docs) as f64 / (1 + df) as f64).ln() + 1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VocabConfig {
    pub min_df: usize,
    pub max_features: Option<usize>,
    pub lowercase: bool,
    /// Use `1 + ln(tf)` instead of raw counts.
    pub sublinear_tf: bool,
    pub l2_normalize: bool,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            min_df: 2,
            max_features: Some(50_000),
            lowercase: true,
            sublinear_tf: false,
            l2_normalize: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct TermEntry {
    index: u32,
    df: usize,
}

/// Term table fitted on training documents.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    terms: HashMap<String, TermEntry>,
    /// Terms by index.
    ordered: Vec<String>,
    idf: Vec<f64>,
    n_docs: usize,
    config: VocabConfig,
}

impl Vocabulary {
    fn from_entries(mut entries: Vec<(String, usize)>, n_docs: usize, config: VocabConfig) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut terms = HashMap::with_capacity(entries.len());
        let mut ordered = Vec::with_capacity(entries.len());
        let mut idf = Vec::with_capacity(entries.len());
        for (index, (term, df)) in entries.into_iter().enumerate() {
            idf.push(compute_idf(df, n_docs)?);
            terms.insert(
                term.clone(),
                TermEntry {
                    index: index as u32,
                    df,
                },
            );
            ordered.push(term);
        }
        Ok(Vocabulary {
            terms,
            ordered,
            idf,
            n_docs,
            config,
        })
    }

    pub fn len(&self) -> usize {
        self.ordered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn config(&self) -> &VocabConfig {
        &self.config
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.terms.get(term).map(|e| e.index as usize)
    }

    pub fn document_frequency(&self, term: &str) -> Option<usize> {
        self.terms.get(term).map(|e| e.df)
    }

    pub fn idf(&self, index: usize) -> f64 {
        self.idf[index]
    }

    /// Terms in index order.
    pub fn terms(&self) -> &[String] {
        &self.ordered
    }

    /// Tokenizes with this vocabulary's settings and vectorizes.
    pub fn transform(&self, text: &str) -> SparseVector {
        vectorize(&tokenize(text, self.config.lowercase), self)
    }

    pub fn transform_all<S: AsRef<str> + Sync>(&self, texts: &[S]) -> Vec<SparseVector> {
        texts.par_iter().map(|t| self.transform(t.as_ref())).collect()
    }

    /// Writes the header line followed by `term<TAB>index<TAB>df` per term.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let c = &self.config;
        writeln!(
            out,
            "#detext-vocab n_docs={} min_df={} max_features={} lowercase={} sublinear_tf={} l2_normalize={}",
            self.n_docs,
            c.min_df,
            c.max_features.map_or_else(|| "none".to_string(), |m| m.to_string()),
            c.lowercase,
            c.sublinear_tf,
            c.l2_normalize
        )?;
        for (index, term) in self.ordered.iter().enumerate() {
            writeln!(out, "{term}\t{index}\t{}", self.terms[term].df)?;
        }
        out.flush()
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Data("vocabulary file is empty".into()))?
            .map_err(|e| Error::Data(format!("vocabulary header: {e}")))?;
        let fields = header
            .strip_prefix("#detext-vocab ")
            .ok_or_else(|| Error::Data("vocabulary header missing".into()))?;
        let kv: HashMap<&str, &str> = fields.split_whitespace().filter_map(|f| f.split_once('=')).collect();
        let get = |k: &str| {
            kv.get(k)
                .copied()
                .ok_or_else(|| Error::Data(format!("vocabulary header lacks {k}")))
        };
        let num = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::Data(format!("vocabulary header: bad {k}")))
        };
        let flag = |k: &str| -> Result<bool> {
            get(k)?
                .parse()
                .map_err(|_| Error::Data(format!("vocabulary header: bad {k}")))
        };
        let n_docs = num("n_docs")?;
        let config = VocabConfig {
            min_df: num("min_df")?,
            max_features: match get("max_features")? {
                "none" => None,
                _ => Some(num("max_features")?),
            },
            lowercase: flag("lowercase")?,
            sublinear_tf: flag("sublinear_tf")?,
            l2_normalize: flag("l2_normalize")?,
        };

        let mut entries = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Data(format!("vocabulary line {}: {e}", n + 2)))?;
            let bad = || Error::Data(format!("vocabulary line {}: expected term<TAB>index<TAB>df", n + 2));
            let mut parts = line.split('\t');
            let (Some(term), Some(index), Some(df), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
                return Err(bad());
            };
            let index: usize = index.parse().map_err(|_| bad())?;
            let df: usize = df.parse().map_err(|_| bad())?;
            if index != entries.len() {
                return Err(Error::Data(format!(
                    "vocabulary line {}: index {index} out of sequence",
                    n + 2
                )));
            }
            entries.push((term.to_string(), df));
        }
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Data("vocabulary terms are not in sorted order".into()));
        }
        Vocabulary::from_entries(entries, n_docs, config)
    }
}

/// Fits a vocabulary: document frequency counts presence, terms under
/// `min_df` are dropped, `max_features` keeps the highest-df terms
/// (lexicographically smaller on ties), and indices follow term order.
pub fn build_vocabulary<D: AsRef<[String]> + Sync>(docs: &[D], config: VocabConfig) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::Config("cannot fit a vocabulary on zero documents".into()));
    }
    let df: HashMap<&str, usize> = docs
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<&str, usize>, doc| {
            let mut seen: Vec<&str> = doc.as_ref().iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for term in seen {
                *acc.entry(term).or_default() += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (term, n) in b {
                *a.entry(term).or_default() += n;
            }
            a
        });

    let mut entries: Vec<(String, usize)> = df
        .into_iter()
        .filter(|&(_, n)| n >= config.min_df)
        .map(|(t, n)| (t.to_string(), n))
        .collect();
    if let Some(max) = config.max_features {
        entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        entries.truncate(max);
    }
    Vocabulary::from_entries(entries, docs.len(), config)
}

/// TF-IDF weights of `doc` over `vocab`. Out-of-vocabulary terms are ignored;
/// a document with no known terms maps to the empty vector.
pub fn vectorize<S: AsRef<str>>(doc: &[S], vocab: &Vocabulary) -> SparseVector {
    let mut counts: Vec<(u32, u32)> = doc
        .iter()
        .filter_map(|t| vocab.terms.get(t.as_ref()).map(|e| (e.index, 1)))
        .collect();
    counts.sort_unstable_by_key(|&(i, _)| i);
    counts.dedup_by(|next, kept| {
        if next.0 == kept.0 {
            kept.1 += next.1;
            true
        } else {
            false
        }
    });

    let mut weights: Vec<(u32, f64)> = counts
        .into_iter()
        .map(|(i, tf)| {
            let tf = if vocab.config.sublinear_tf {
                1.0 + f64::from(tf).ln()
            } else {
                f64::from(tf)
            };
            (i, tf * vocab.idf[i as usize])
        })
        .collect();
    if vocab.config.l2_normalize {
        let norm = weights.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut weights {
                *w /= norm;
            }
        }
    }
    SparseVector::from_sorted_pairs(weights)
}
