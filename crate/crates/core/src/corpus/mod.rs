//! Sentence records, length buckets, and the corpus operations that shape a
//! paired human/machine dataset: ingestion, normalization, and splitting.

mod bucket;
mod ingest;
mod sample;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bucket::{Bucket, BucketSpec, DEFAULT_RANGES, DEFAULT_SPEC_REPAIRS, MAX_WORDS, MIN_WORDS};
pub use ingest::{chunk_long_text, count_words, ingest_source, ingest_source_as, truncate_words};
pub use sample::{normalize_corpus, split_corpus, subsample_groups, SplitRatios};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Human,
    Machine,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Human => "human",
            Label::Machine => "machine",
        })
    }
}

/// Where a sentence came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Twitter,
    Football,
    Gutenberg,
    Pubmedqa,
    Squad,
    Synthetic,
    Other,
}

impl Source {
    pub const ALL: [Source; 7] = [
        Source::Twitter,
        Source::Football,
        Source::Gutenberg,
        Source::Pubmedqa,
        Source::Squad,
        Source::Synthetic,
        Source::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Twitter => "twitter",
            Source::Football => "football",
            Source::Gutenberg => "gutenberg",
            Source::Pubmedqa => "pubmedqa",
            Source::Squad => "squad",
            Source::Synthetic => "synthetic",
            Source::Other => "other",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Source::ALL
            .into_iter()
            .find(|src| src.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown source tag {s:?}")))
    }
}

/// One sentence. Serialized field order is the canonical on-disk order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextRecord {
    pub id: String,
    pub text: String,
    pub label: Label,
    pub source: Source,
    pub word_count: usize,
    pub bucket: Option<Bucket>,
    /// Shared by a human sentence and its machine rephrase; the value is the
    /// human record's id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
}

impl TextRecord {
    /// Key of the group that must stay together when splitting.
    pub fn group_key(&self) -> &str {
        self.pair_id.as_deref().unwrap_or(&self.id)
    }
}

/// A validated collection of records sharing one bucket spec.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    records: Vec<TextRecord>,
    bucket_spec: BucketSpec,
    pub provenance: BTreeMap<String, String>,
}

impl Corpus {
    /// Builds a corpus, checking every record invariant.
    pub fn new(
        records: Vec<TextRecord>,
        bucket_spec: BucketSpec,
        provenance: BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut ids = HashSet::with_capacity(records.len());
        for r in &records {
            if !ids.insert(r.id.as_str()) {
                return Err(Error::Data(format!("duplicate record id {:?}", r.id)));
            }
            if r.word_count != count_words(&r.text) {
                return Err(Error::Data(format!(
                    "record {:?}: word_count {} but text has {} words",
                    r.id,
                    r.word_count,
                    count_words(&r.text)
                )));
            }
            if !(MIN_WORDS..=MAX_WORDS).contains(&r.word_count) {
                return Err(Error::Data(format!(
                    "record {:?}: word_count {} outside {MIN_WORDS}..={MAX_WORDS}",
                    r.id, r.word_count
                )));
            }
            let expected = bucket_spec.assign(r.word_count);
            if r.bucket != expected {
                return Err(Error::Data(format!(
                    "record {:?}: bucket {} inconsistent with word_count {}",
                    r.id,
                    r.bucket.map(|b| b.to_string()).unwrap_or_else(|| "<none>".into()),
                    r.word_count
                )));
            }
        }
        let labels: HashMap<&str, Label> = records.iter().map(|r| (r.id.as_str(), r.label)).collect();
        for r in records.iter().filter(|r| r.label == Label::Machine) {
            if let Some(pair) = &r.pair_id {
                if labels.get(pair.as_str()) != Some(&Label::Human) {
                    return Err(Error::Data(format!(
                        "machine record {:?} is paired with {pair:?}, which is not a human record in this corpus",
                        r.id
                    )));
                }
            }
        }
        Ok(Corpus {
            records,
            bucket_spec,
            provenance,
        })
    }

    pub fn records(&self) -> &[TextRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<TextRecord> {
        self.records
    }

    pub fn bucket_spec(&self) -> &BucketSpec {
        &self.bucket_spec
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Record count per bucket, in spec order.
    pub fn bucket_counts(&self) -> Vec<(Bucket, usize)> {
        let mut counts = vec![0usize; self.bucket_spec.len()];
        for r in &self.records {
            if let Some(pos) = r.bucket.and_then(|b| self.bucket_spec.position(b)) {
                counts[pos] += 1;
            }
        }
        self.bucket_spec.ranges().iter().copied().zip(counts).collect()
    }

    /// Writes one JSON object per line in canonical field order.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Reads a corpus written by [`Corpus::write_jsonl`].
    pub fn read_jsonl<R: BufRead>(input: R, bucket_spec: BucketSpec) -> Result<Self> {
        let mut records = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::Data(format!("corpus line {}: {e}", n + 1)))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: TextRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Data(format!("corpus line {}: {e}", n + 1)))?;
            records.push(record);
        }
        Corpus::new(records, bucket_spec, BTreeMap::new())
    }
}

/// Train/test/val partition of a corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitSet {
    pub train: Corpus,
    pub test: Corpus,
    pub val: Corpus,
}

impl SplitSet {
    pub fn parts(&self) -> [(&'static str, &Corpus); 3] {
        [("train", &self.train), ("test", &self.test), ("val", &self.val)]
    }
}
