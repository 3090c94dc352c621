use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use wedgegreen_core::{Error, Result};

/// Accumulates everything that determines a run: the command, its
/// parameters and the contents of every input file. Output paths are left
/// out so moving an output does not change its hash.
pub struct ConfigHash {
    hasher: Sha256,
    pub seed: u64,
}

impl ConfigHash {
    pub fn new(command: &str, seed: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(format!("command={command}\nseed={seed}\n"));
        Self { hasher, seed }
    }

    pub fn arg(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.hasher.update(format!("{key}={value}\n"));
        self
    }

    /// Reads an input file and mixes its contents into the hash.
    pub fn file(&mut self, path: &Path) -> Result<String> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        self.hasher.update(format!("file\n{}\n", text.len()));
        self.hasher.update(&text);
        Ok(text)
    }

    pub fn hex(&self) -> String {
        self.hasher.clone().finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Header comment for CSV outputs.
    pub fn header(&self, command: &str) -> String {
        format!("wedgegreen {command}\nconfig_sha256={}\nseed={}", self.hex(), self.seed)
    }
}

/// Writes to the file, or to stdout when no path is given.
pub fn sink(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

/// Pretty JSON with the provenance fields merged into the top-level object.
pub fn emit_json(path: Option<&PathBuf>, mut value: serde_json::Value, hash: &ConfigHash) -> Result<()> {
    if let Some(obj) = value.as_object_mut() {
        obj.insert("config_sha256".into(), hash.hex().into());
        obj.insert("seed".into(), hash.seed.into());
    }
    let mut out = sink(path)?;
    let text = serde_json::to_string_pretty(&value).map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(out, "{text}")?;
    out.flush()?;
    Ok(())
}
