//! Per-invocation bookkeeping: hashed inputs, atomic outputs and the run
//! manifest written next to the primary output.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use musebench::model::{parse_jsonl, write_jsonl, JsonlRecord};

use crate::error::invalid;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a serde_json::Value,
    pub inputs: &'a [FileDigest],
    pub outputs: &'a [FileDigest],
    pub timestamp: String,
}

struct Input {
    path: PathBuf,
    canonical: PathBuf,
    bytes: Vec<u8>,
}

pub struct Run {
    command: String,
    settings: serde_json::Value,
    inputs: Vec<Input>,
    input_digests: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn basename(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// `<path>.manifest.json`.
pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes `bytes` to a temporary file in the target directory, then renames
/// it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| e.error)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

impl Run {
    /// Reads and hashes every input up front, so a missing file fails the run
    /// before any work is done.
    pub fn new(command: &str, settings: serde_json::Value, inputs: &[&Path]) -> Result<Self> {
        let mut run = Run {
            command: command.to_string(),
            settings,
            inputs: Vec::new(),
            input_digests: Vec::new(),
            outputs: Vec::new(),
        };
        for path in inputs {
            let bytes =
                std::fs::read(path).with_context(|| format!("reading input {}", path.display()))?;
            let canonical = std::fs::canonicalize(path)?;
            run.input_digests.push(FileDigest {
                name: basename(path),
                sha256: sha256_hex(&bytes),
            });
            run.inputs.push(Input {
                path: path.to_path_buf(),
                canonical,
                bytes,
            });
        }
        Ok(run)
    }

    pub fn bytes(&self, path: &Path) -> &[u8] {
        &self
            .inputs
            .iter()
            .find(|i| i.path == path)
            .expect("input registered at launch")
            .bytes
    }

    pub fn jsonl<T: JsonlRecord>(&self, path: &Path) -> Result<Vec<T>> {
        parse_jsonl(self.bytes(path), None).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn json<T: DeserializeOwned>(&self, path: &Path) -> Result<T> {
        serde_json::from_slice(self.bytes(path))
            .map_err(|e| invalid(format!("parsing {}: {e}", path.display())))
    }

    /// Refuses any output that would overwrite an input.
    pub fn check_outputs(&self, outputs: &[&Path]) -> Result<()> {
        for out in outputs {
            let Ok(canonical) = std::fs::canonicalize(out) else {
                continue;
            };
            if let Some(i) = self.inputs.iter().find(|i| i.canonical == canonical) {
                return Err(invalid(format!(
                    "output {} would overwrite input {}",
                    out.display(),
                    i.path.display()
                )));
            }
        }
        Ok(())
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        self.check_outputs(&[path])?;
        write_atomic(path, bytes)?;
        self.outputs.push(FileDigest {
            name: basename(path),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_jsonl<T: Serialize>(&mut self, path: &Path, records: &[T]) -> Result<()> {
        let mut buf = Vec::new();
        write_jsonl(&mut buf, records)?;
        self.write(path, &buf)
    }

    pub fn write_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<()> {
        let mut buf = serde_json::to_vec_pretty(value)?;
        buf.push(b'\n');
        self.write(path, &buf)
    }

    /// Writes the manifest beside `primary` and returns its path.
    pub fn finish(self, primary: &Path) -> Result<PathBuf> {
        let manifest = Manifest {
            tool: env!("CARGO_BIN_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            config: &self.settings,
            inputs: &self.input_digests,
            outputs: &self.outputs,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        };
        let path = manifest_path(primary);
        let mut buf = serde_json::to_vec_pretty(&manifest)?;
        buf.push(b'\n');
        write_atomic(&path, &buf)?;
        Ok(path)
    }
}
