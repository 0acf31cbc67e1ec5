use std::io::Read;

use super::{BucketSpec, Label, Source, TextRecord, MAX_WORDS, MIN_WORDS};
use crate::error::{Error, Result};

/// Number of maximal whitespace-delimited tokens; punctuation stays attached.
pub fn count_words(text: &str) -> usize {
    text.split_whitespace().count()
}

/// First `max_words` words of `text`, joined by single spaces.
pub fn truncate_words(text: &str, max_words: usize) -> String {
    text.split_whitespace()
        .take(max_words)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Splits `text` into consecutive chunks of `target_len` words.
///
/// A trailing remainder is kept when it still has at least `MIN_WORDS` words
/// and discarded otherwise.
///
/// # Panics
///
/// If `target_len < MIN_WORDS`.
pub fn chunk_long_text(text: &str, target_len: usize) -> Vec<String> {
    assert!(
        target_len >= MIN_WORDS,
        "chunk length {target_len} is below the {MIN_WORDS}-word floor"
    );
    let words: Vec<&str> = text.split_whitespace().collect();
    words
        .chunks(target_len)
        .filter(|chunk| chunk.len() == target_len || chunk.len() >= MIN_WORDS)
        .map(|chunk| chunk.join(" "))
        .collect()
}

/// Turns raw lines into human records, using the source tag as id prefix.
pub fn ingest_source<R: Read>(
    raw: R,
    source: Source,
    spec: &BucketSpec,
    chunk_len: Option<usize>,
) -> Result<Vec<TextRecord>> {
    ingest_source_as(raw, source, source.as_str(), spec, chunk_len)
}

/// Like [`ingest_source`] with an explicit id prefix, for when several files
/// share one source tag.
///
/// Each line is optionally chunked, truncated to `MAX_WORDS`, and dropped if
/// shorter than `MIN_WORDS`. Surviving text is whitespace-normalized.
/// Ids are `{prefix}-{line:07}` (1-based), with a `-{chunk:03}` suffix when
/// chunking is on.
pub fn ingest_source_as<R: Read>(
    mut raw: R,
    source: Source,
    id_prefix: &str,
    spec: &BucketSpec,
    chunk_len: Option<usize>,
) -> Result<Vec<TextRecord>> {
    if let Some(len) = chunk_len {
        if len < MIN_WORDS {
            return Err(Error::Config(format!(
                "chunk length {len} is below the {MIN_WORDS}-word floor"
            )));
        }
    }
    let mut bytes = Vec::new();
    raw.read_to_end(&mut bytes)
        .map_err(|e| Error::Data(format!("reading {source} input: {e}")))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::Ingest {
        offset: e.valid_up_to(),
    })?;

    let mut records = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let pieces = match chunk_len {
            Some(len) => chunk_long_text(line, len)
                .into_iter()
                .enumerate()
                .map(|(i, piece)| (Some(i), piece))
                .collect(),
            None => vec![(None, line.to_string())],
        };
        for (chunk_idx, piece) in pieces {
            let text = truncate_words(&piece, MAX_WORDS);
            let word_count = count_words(&text);
            if word_count < MIN_WORDS {
                continue;
            }
            let id = match chunk_idx {
                Some(c) => format!("{id_prefix}-{:07}-{c:03}", line_no + 1),
                None => format!("{id_prefix}-{:07}", line_no + 1),
            };
            records.push(TextRecord {
                id,
                text,
                label: Label::Human,
                source,
                word_count,
                bucket: spec.assign(word_count),
                pair_id: None,
            });
        }
    }
    Ok(records)
}
