use std::path::{Path, PathBuf};

use labelbridge::util::sha256_hex;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    /// File name; artifacts live in the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

fn entry(name: &str, bytes: &[u8]) -> FileEntry {
    FileEntry {
        path: name.to_string(),
        sha256: sha256_hex(bytes),
        bytes: bytes.len() as u64,
    }
}

/// Collects artifacts written by one subcommand and finishes with its
/// manifest, `manifest.<command>.json`. No timestamps: identical runs give
/// identical manifests.
pub struct Outputs {
    dir: PathBuf,
    command: &'static str,
    config_hash: String,
    seed: u64,
    inputs: Vec<FileEntry>,
    artifacts: Vec<FileEntry>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: &'a str,
    seed: u64,
    inputs: &'a [FileEntry],
    artifacts: &'a [FileEntry],
    summary: serde_json::Value,
}

impl Outputs {
    pub fn new(dir: &Path, command: &'static str, config_hash: String, seed: u64) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            command,
            config_hash,
            seed,
            inputs: Vec::new(),
            artifacts: Vec::new(),
        })
    }

    /// Records an input file by name and content hash.
    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        self.inputs.push(entry(&name, &bytes));
        Ok(())
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        tracing::info!(artifact = name, bytes = bytes.len(), "wrote artifact");
        self.artifacts.push(entry(name, bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn finish(self, summary: serde_json::Value) -> Result<PathBuf, CliError> {
        let manifest = Manifest {
            command: self.command,
            config_hash: &self.config_hash,
            seed: self.seed,
            inputs: &self.inputs,
            artifacts: &self.artifacts,
            summary,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("serializable");
        bytes.push(b'\n');
        let path = self.dir.join(format!("manifest.{}.json", self.command));
        std::fs::write(&path, bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
