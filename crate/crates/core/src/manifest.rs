//! Provenance records written next to every pipeline artifact.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;
pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of a file's contents, streamed.
pub fn file_sha256(path: &Path) -> Result<String> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(f);
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = r.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    /// As given on the command line for inputs; relative to the manifest's
    /// directory for outputs.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileRecord {
    fn of(path: &Path, recorded_as: String) -> Result<Self> {
        let bytes = std::fs::metadata(path).map_err(|e| Error::io(path, e))?.len();
        Ok(Self {
            path: recorded_as,
            sha256: file_sha256(path)?,
            bytes,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    /// RFC 3339, UTC.
    pub created_at: String,
    pub seed: Option<u64>,
    pub corpus_digest: Option<String>,
    /// Resolved settings of every stage involved.
    pub config: serde_json::Value,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            manifest_version: MANIFEST_VERSION,
            tool: TOOL_NAME.into(),
            tool_version: TOOL_VERSION.into(),
            command: command.into(),
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            seed: None,
            corpus_digest: None,
            config: serde_json::Value::Object(Default::default()),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileRecord::of(path, path.display().to_string())?);
        Ok(())
    }

    /// Records `path`, which must live under `base` (the manifest's directory).
    pub fn add_output(&mut self, base: &Path, path: &Path) -> Result<()> {
        let rel = path.strip_prefix(base).unwrap_or(path);
        self.outputs.push(FileRecord::of(path, rel.display().to_string())?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: RunManifest = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        if m.manifest_version != MANIFEST_VERSION {
            return Err(Error::format(
                path,
                format!("unsupported manifest version {}", m.manifest_version),
            ));
        }
        Ok(m)
    }

    /// Checks that every recorded output still matches its digest.
    pub fn verify_outputs(&self, manifest_path: &Path) -> Result<()> {
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        for out in &self.outputs {
            let p = resolve(base, &out.path);
            let got = file_sha256(&p)?;
            if got != out.sha256 {
                return Err(Error::InvalidInput(format!(
                    "{} changed since it was written (sha256 {got}, manifest {})",
                    p.display(),
                    out.sha256
                )));
            }
        }
        Ok(())
    }

    pub fn output(&self, name: &str) -> Option<&FileRecord> {
        self.outputs.iter().find(|o| o.path == name)
    }
}

fn resolve(base: &Path, recorded: &str) -> PathBuf {
    let p = Path::new(recorded);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Manifest location for a single-file artifact: `<file>.manifest.json`.
pub fn sidecar_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    artifact.with_file_name(name)
}
