//! Config files are flat `key = value` lines. Each key names a long flag;
//! entries are spliced in right after the subcommand so that flags given on
//! the command line, which come later, win.

use std::collections::HashMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::CommandFactory;

use crate::args::Cli;
use crate::error::CliError;

#[derive(Debug, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse(text: &str) -> Result<Vec<Entry>, String> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        let value = value.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .unwrap_or(value);
        entries.push(Entry {
            key,
            value: value.to_string(),
            line: i + 1,
        });
    }
    Ok(entries)
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Returns `argv` with the config file's entries inserted after the
/// subcommand. Keys that exist only on other subcommands are skipped, so one
/// file can serve the whole pipeline.
pub fn inject(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let cmd = Cli::command();
    let names: Vec<String> = cmd.get_subcommands().map(|c| c.get_name().to_string()).collect();
    let Some(at) = argv.iter().position(|a| names.iter().any(|n| a.to_str() == Some(n.as_str()))) else {
        return Ok(argv);
    };
    let sub = argv[at].to_string_lossy().into_owned();

    let mut known: HashMap<String, (bool, bool)> = HashMap::new();
    for c in cmd.get_subcommands() {
        let here = c.get_name() == sub;
        for a in c.get_arguments() {
            if let Some(long) = a.get_long() {
                let e = known.entry(long.to_string()).or_insert((false, a.get_action().takes_values()));
                e.0 |= here;
            }
        }
    }
    for a in cmd.get_arguments() {
        if let Some(long) = a.get_long() {
            known.insert(long.to_string(), (true, a.get_action().takes_values()));
        }
    }

    let text = read_config(&path)?;
    let entries = parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut injected: Vec<OsString> = Vec::new();
    for Entry { key, value, line } in entries {
        let bad = |msg: String| CliError::Usage(format!("{} line {line}: {msg}", path.display()));
        if key == "config" {
            return Err(bad("config files cannot include other config files".into()));
        }
        let Some(&(applies, takes_value)) = known.get(&key) else {
            return Err(bad(format!("unknown key {key:?}")));
        };
        if !applies {
            log::debug!("config key {key:?} does not apply to {sub}");
            continue;
        }
        if takes_value {
            injected.push(format!("--{key}").into());
            injected.push(value.into());
        } else {
            match value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => injected.push(format!("--{key}").into()),
                "false" | "no" | "0" => {}
                other => return Err(bad(format!("{key} expects true or false, got {other:?}"))),
            }
        }
    }
    let mut out = argv;
    out.splice(at + 1..at + 1, injected);
    Ok(out)
}

fn read_config(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<OsString> {
        s.split_whitespace().map(OsString::from).collect()
    }

    #[test]
    fn parses_comments_quotes_and_underscores() {
        let e = parse("# top\n\nc = 10\nmin_df=3 \nbackend-url = \"http://x/v1\"\n").unwrap();
        let kv: Vec<(&str, &str)> = e.iter().map(|e| (e.key.as_str(), e.value.as_str())).collect();
        assert_eq!(kv, [("c", "10"), ("min-df", "3"), ("backend-url", "http://x/v1")]);
        assert_eq!(e[1].line, 4);
        assert!(parse("novalue\n").is_err());
        assert!(parse(" = 3\n").is_err());
    }

    #[test]
    fn injects_after_subcommand_and_filters() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.conf");
        std::fs::write(&cfg, "c = 10\nstrict = true\nratios = 0.5,0.25,0.25\nthreads = 2\nsublinear-tf = false\n").unwrap();
        let out = inject(argv(&format!("detext --config {} train --c 3", cfg.display()))).unwrap();
        let out: Vec<String> = out.iter().map(|s| s.to_string_lossy().into_owned()).collect();
        assert_eq!(out[3], "train");
        assert_eq!(out[4..8], ["--c", "10", "--threads", "2"]);
        assert_eq!(out[8..], ["--c", "3"]);

        let out = inject(argv(&format!("detext evaluate --config={}", cfg.display()))).unwrap();
        assert!(out.iter().any(|s| s == "--strict"));
        assert!(!out.iter().any(|s| s == "--c"));
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.conf");
        std::fs::write(&cfg, "colour = blue\n").unwrap();
        let err = inject(argv(&format!("detext train --config {}", cfg.display()))).unwrap_err();
        assert!(matches!(err, CliError::Usage(ref m) if m.contains("line 1")), "{err:?}");
        std::fs::write(&cfg, "strict = maybe\n").unwrap();
        assert!(inject(argv(&format!("detext evaluate --config {}", cfg.display()))).is_err());
        assert!(inject(argv("detext train --config /nonexistent/x.conf")).is_err());
    }
}
