//! Output bookkeeping and replay manifests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::settings::Settings;
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to rerun a command and check its outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Fully resolved settings, with input paths made absolute. The output
    /// directory and thread count are not recorded.
    pub settings: Settings,
    pub inputs: Vec<FileHash>,
    /// Output files relative to the output directory.
    pub outputs: Vec<FileHash>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("manifest {}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hash_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(sha256_hex(&bytes))
}

pub fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Lib(fgcf::Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Collects the files a command writes.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<FileHash>,
}

impl Outputs {
    pub fn create(dir: PathBuf) -> Result<Outputs, CliError> {
        std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        Ok(Outputs { dir, files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let bytes = bytes.as_ref();
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        self.files.push(FileHash {
            path: PathBuf::from(name),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn finish(self, command: &str, settings: Settings, inputs: Vec<FileHash>) -> Result<Manifest, CliError> {
        let manifest = Manifest {
            tool: "fgcf".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            settings,
            inputs,
            outputs: self.files,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.dir.join(MANIFEST);
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        Ok(manifest)
    }
}
