use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ArgMatches;
use detext_core::Error;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// What a run read and how it was configured, written beside its outputs.
/// Carries no timestamps so that identical runs produce identical files.
pub struct Provenance {
    command: String,
    config: Map<String, Value>,
    inputs: BTreeMap<String, String>,
    notes: Map<String, Value>,
}

fn snapshot(m: &ArgMatches, into: &mut Map<String, Value>) {
    for id in m.ids() {
        let Ok(Some(raw)) = m.try_get_raw(id.as_str()) else { continue };
        let vals: Vec<Value> = raw.map(|v| Value::String(v.to_string_lossy().into_owned())).collect();
        let v = match <[Value; 1]>::try_from(vals) {
            Ok([one]) => one,
            Err(many) => Value::Array(many),
        };
        into.insert(id.as_str().replace('_', "-"), v);
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl Provenance {
    pub fn new(command: &str, root: &ArgMatches, sub: &ArgMatches) -> Self {
        let mut config = Map::new();
        snapshot(root, &mut config);
        snapshot(sub, &mut config);
        Provenance {
            command: command.to_string(),
            config,
            inputs: BTreeMap::new(),
            notes: Map::new(),
        }
    }

    /// Reads a file and records its SHA-256.
    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = fs::read(path).map_err(|e| Error::persistence(path, e))?;
        self.inputs
            .insert(path.display().to_string(), hex(&Sha256::digest(&bytes)));
        Ok(bytes)
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.notes.insert(key.to_string(), value.into());
    }

    pub fn to_json(&self) -> String {
        let v = json!({
            "tool": "detext",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "run": self.notes,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("provenance serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, self.to_json().as_bytes())
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::persistence(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::persistence(path, e).into())
}

/// `report.csv` -> `report.csv.provenance.json`
pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".provenance.json");
    path.with_file_name(name)
}
