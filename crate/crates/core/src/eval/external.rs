use std::collections::{HashMap, HashSet};
use std::io::Read;

use crate::corpus::Corpus;
use crate::error::{Error, Result};

use super::ScoredRecord;

/// F1 threshold for files that declare a `threshold` column but leave it
/// empty, i.e. probability-like scores.
pub const PROBABILITY_THRESHOLD: f64 = 0.5;

/// Scores read from an external detector's output file.
#[derive(Clone, Debug, PartialEq)]
pub struct ExternalScores {
    /// In file order.
    pub scored: Vec<ScoredRecord>,
    /// The file's own F1 threshold, when it declares a `threshold` column.
    pub threshold: Option<f64>,
    /// Corpus ids the file did not cover, in corpus order.
    pub missing: Vec<String>,
}

/// Joins a `record_id,score[,threshold]` CSV to corpus labels and buckets.
///
/// A `threshold` column makes the file carry its own decision threshold: all
/// non-empty cells must agree, and an all-empty column means
/// [`PROBABILITY_THRESHOLD`]. Uncovered corpus ids are logged, or rejected
/// when `strict` is set.
pub fn ingest_external_scores<R: Read>(input: R, corpus: &Corpus, strict: bool) -> Result<ExternalScores> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("score file header: {e}")))?
        .clone();
    let header: Vec<&str> = headers.iter().collect();
    let has_threshold = match header[..] {
        ["record_id", "score"] => false,
        ["record_id", "score", "threshold"] => true,
        _ => {
            return Err(Error::Data(format!(
                "score file header must be record_id,score[,threshold], got {}",
                header.join(",")
            )))
        }
    };

    let by_id: HashMap<&str, _> = corpus.records().iter().map(|r| (r.id.as_str(), r)).collect();
    let mut seen: HashSet<String> = HashSet::new();
    let mut scored = Vec::new();
    let mut declared: Option<f64> = None;
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Data(format!("score file line {line}: {e}"))
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |what: &str| Error::Data(format!("score file line {line}: {what}"));
        let id = row.get(0).ok_or_else(|| bad("missing record_id"))?;
        let score: f64 = row
            .get(1)
            .ok_or_else(|| bad("missing score"))?
            .parse()
            .map_err(|_| bad("score is not a number"))?;
        if !score.is_finite() {
            return Err(bad("score is not finite"));
        }
        if has_threshold {
            let cell = row.get(2).unwrap_or("");
            if !cell.is_empty() {
                let t: f64 = cell.parse().map_err(|_| bad("threshold is not a number"))?;
                match declared {
                    Some(prev) if prev != t => {
                        return Err(bad(&format!("threshold {t} differs from earlier {prev}")))
                    }
                    _ => declared = Some(t),
                }
            }
        }
        let record = by_id
            .get(id)
            .ok_or_else(|| bad(&format!("record_id {id:?} is not in the corpus")))?;
        if !seen.insert(id.to_string()) {
            return Err(bad(&format!("duplicate record_id {id:?}")));
        }
        let bucket = record
            .bucket
            .ok_or_else(|| bad(&format!("record {id:?} has no bucket")))?;
        scored.push(ScoredRecord {
            record_id: id.to_string(),
            label: record.label,
            score,
            bucket,
        });
    }

    let missing: Vec<String> = corpus
        .records()
        .iter()
        .filter(|r| !seen.contains(&r.id))
        .map(|r| r.id.clone())
        .collect();
    if !missing.is_empty() {
        let preview: Vec<&str> = missing.iter().take(5).map(String::as_str).collect();
        let msg = format!(
            "score file covers {} of {} corpus records; missing e.g. {}",
            scored.len(),
            corpus.len(),
            preview.join(", ")
        );
        if strict {
            return Err(Error::Data(msg));
        }
        log::warn!("{msg}");
    }
    let threshold = has_threshold.then(|| declared.unwrap_or(PROBABILITY_THRESHOLD));
    Ok(ExternalScores {
        scored,
        threshold,
        missing,
    })
}
