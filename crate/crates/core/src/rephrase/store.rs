use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::RephraseResult;

/// Completed rephrases keyed by source record id, persisted as JSON lines.
///
/// New results are appended and flushed one line at a time; [`compact`]
/// rewrites the file sorted by id.
///
/// [`compact`]: CheckpointStore::compact
#[derive(Debug)]
pub struct CheckpointStore {
    path: PathBuf,
    completed: BTreeMap<String, RephraseResult>,
}

impl CheckpointStore {
    /// Loads the store at `path`, or starts an empty one if the file does not
    /// exist. A torn final line, as left by an interrupted write, is ignored.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut completed = BTreeMap::new();
        match File::open(&path) {
            Ok(f) => {
                let lines: Vec<String> = BufReader::new(f)
                    .lines()
                    .collect::<std::io::Result<_>>()
                    .map_err(|e| Error::persistence(&path, e))?;
                let last = lines.len();
                for (i, line) in lines.iter().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    match serde_json::from_str::<RephraseResult>(line) {
                        Ok(r) => {
                            completed.insert(r.source_record_id.clone(), r);
                        }
                        Err(e) if i + 1 == last => {
                            log::warn!("{}: ignoring torn final line: {e}", path.display());
                        }
                        Err(e) => {
                            return Err(Error::Data(format!("{} line {}: {e}", path.display(), i + 1)));
                        }
                    }
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(Error::persistence(&path, e)),
        }
        Ok(CheckpointStore { path, completed })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn completed(&self) -> &BTreeMap<String, RephraseResult> {
        &self.completed
    }

    pub fn len(&self) -> usize {
        self.completed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.completed.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.completed.contains_key(id)
    }

    pub fn get(&self, id: &str) -> Option<&RephraseResult> {
        self.completed.get(id)
    }

    pub(crate) fn insert(&mut self, result: RephraseResult) {
        self.completed.insert(result.source_record_id.clone(), result);
    }

    /// Opens the file for appending, creating it if needed. Fails if the
    /// location is not writable.
    pub(crate) fn appender(&self) -> Result<Appender> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::persistence(&self.path, e))?;
        Ok(Appender {
            path: self.path.clone(),
            file,
        })
    }

    /// Rewrites the file with one line per result in id order.
    pub fn compact(&self) -> Result<()> {
        let tmp = self.path.with_extension("compact.tmp");
        let write = || -> std::io::Result<()> {
            let mut out = BufWriter::new(File::create(&tmp)?);
            for r in self.completed.values() {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
            out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
            fs::rename(&tmp, &self.path)
        };
        write().map_err(|e| Error::persistence(&self.path, e))
    }
}

pub(crate) struct Appender {
    path: PathBuf,
    file: File,
}

impl Appender {
    pub(crate) fn append(&mut self, result: &RephraseResult) -> Result<()> {
        let mut line = serde_json::to_vec(result).expect("result serializes");
        line.push(b'\n');
        self.file
            .write_all(&line)
            .and_then(|_| self.file.flush())
            .map_err(|e| Error::persistence(&self.path, e))
    }
}
