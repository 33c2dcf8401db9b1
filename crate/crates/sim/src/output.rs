//! CSV files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Shortest round-trip text for a float.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Output directory that remembers what it wrote.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<OutputFile>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|source| CliError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[OutputFile] {
        &self.written
    }

    pub fn write_csv<R, I>(&mut self, name: &str, header: &[&str], rows: R) -> Result<(), CliError>
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator<Item = String>,
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Failed(format!("{name}: {e}"));
        w.write_record(header).map_err(fail)?;
        for row in rows {
            w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(fail)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Failed(format!("{name}: {e}")))?;
        self.write_bytes(name, &bytes)
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })?;
        self.written.push(OutputFile {
            file: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
        Ok(())
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn write_manifest(&self, manifest: &RunManifest) -> Result<(), CliError> {
        let path = self.root.join("manifest.json");
        let mut text = serde_json::to_string_pretty(manifest)
            .map_err(|e| CliError::Failed(format!("manifest: {e}")))?;
        text.push('\n');
        fs::write(&path, text).map_err(|source| CliError::Io { path, source })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub toolkit: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Resolved config as TOML; feeding it back reproduces the CSVs.
    pub config: String,
    pub duration_seconds: f64,
    pub outputs: Vec<OutputFile>,
}
