//! Artifact writing. Every file carries the run seed, the config hash and the
//! format version: CSVs in a leading `#` line, JSON files under `provenance`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;

/// Hash of the resolved configuration plus the bytes of every consumed input.
pub struct ConfigHasher(Sha256);

impl ConfigHasher {
    pub fn new(cfg: &RunConfig, verb: &str) -> Self {
        let mut h = Sha256::new();
        h.update(verb.as_bytes());
        h.update([0]);
        h.update(cfg.canonical().as_bytes());
        ConfigHasher(h)
    }

    pub fn absorb(&mut self, bytes: &[u8]) {
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(bytes);
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
    pub format_version: u32,
}

impl Provenance {
    pub fn to_json(&self) -> Value {
        json!({
            "seed": self.seed,
            "config_hash": self.config_hash,
            "format_version": self.format_version,
        })
    }

    /// `# seed=..,config_hash=..,format_version=..` followed by `extra` pairs.
    pub fn csv_line(&self, extra: &[(&str, String)]) -> String {
        let mut s = format!(
            "# seed={},config_hash={},format_version={}",
            self.seed, self.config_hash, self.format_version
        );
        for (k, v) in extra {
            s.push_str(&format!(",{k}={v}"));
        }
        s.push('\n');
        s
    }
}

/// Collects written files of one command.
pub struct Writer {
    pub dir: PathBuf,
    pub provenance: Provenance,
    pub written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dir: &Path, provenance: Provenance) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            provenance,
            written: vec![],
        })
    }

    /// Write `body` verbatim.
    pub fn raw(&mut self, name: &str, body: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, body: &str, extra: &[(&str, String)]) -> CliResult<()> {
        let text = self.provenance.csv_line(extra) + body;
        self.raw(name, &text)
    }

    /// Pretty JSON; objects get a `provenance` member.
    pub fn json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let mut v = serde_json::to_value(value).map_err(deepsurrogate::Error::from)?;
        if let Value::Object(m) = &mut v {
            m.insert("provenance".into(), self.provenance.to_json());
        }
        let text = serde_json::to_string_pretty(&v).map_err(deepsurrogate::Error::from)? + "\n";
        self.raw(name, &text)
    }
}

/// Parse a CSV written by [`Writer::csv`]: `#` lines and the header are skipped.
pub fn read_numeric_csv(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_numeric_csv(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn parse_numeric_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or("missing header")?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = vec![];
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("row {}: {e}", i + 1))?;
        if row.len() != header.len() {
            return Err(format!("row {} has {} columns, expected {}", i + 1, row.len(), header.len()));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
