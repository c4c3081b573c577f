use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::error::{CliError, ErrorReport, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Running,
    Completed,
    Failed,
}

/// Seeds consumed by one replica job.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSeeds {
    pub replica: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub noise: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub paths: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub aux: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

impl From<ErrorReport> for ErrorRecord {
    fn from(r: ErrorReport) -> Self {
        Self {
            kind: r.kind.into(),
            message: r.message,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub code_version: String,
    pub status: Status,
    pub workers: usize,
    pub seeds: Vec<ReplicaSeeds>,
    pub files: Vec<FileEntry>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<ErrorRecord>,
    pub config: ExperimentConfig,
}

pub fn code_version() -> String {
    format!("wgmc-cli {}", env!("CARGO_PKG_VERSION"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn started(config: &ExperimentConfig, workers: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config_hash: config.hash(),
            code_version: code_version(),
            status: Status::Running,
            workers,
            seeds: Vec::new(),
            files: Vec::new(),
            error: None,
            config: config.clone(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::Invalid(e.to_string()))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    /// Accepts the manifest file or the directory holding it.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let file = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        if !file.exists() {
            return Err(CliError::MissingArtifact { path: file });
        }
        let text = std::fs::read_to_string(&file).map_err(|e| CliError::io(&file, e))?;
        let m: Self = serde_json::from_str(&text).map_err(|e| CliError::Parse {
            format: "json",
            message: e.to_string(),
        })?;
        let dir = file.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((m, dir))
    }

    pub fn file(&self, name: &str) -> Option<&FileEntry> {
        self.files.iter().find(|f| f.path == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Overrides;

    #[test]
    fn roundtrip() {
        let cfg = ExperimentConfig::from_value(
            serde_json::json!({"kind": "covariance", "dim": 1, "beta": 1.0, "T": 1.0, "n_paths": 2, "replicas": 2, "seed": 3}),
            &Overrides::default(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::started(&cfg, 1);
        m.seeds.push(ReplicaSeeds {
            replica: 0,
            noise: Some(5),
            paths: None,
            aux: None,
        });
        m.write(dir.path()).unwrap();
        let (back, d) = RunManifest::load(dir.path()).unwrap();
        assert_eq!(back, m);
        assert_eq!(d, dir.path());
        assert_eq!(back.config_hash, cfg.hash());
        assert!(matches!(
            RunManifest::load(&dir.path().join("nope")),
            Err(CliError::MissingArtifact { .. })
        ));
    }

    #[test]
    fn sha_of_empty() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
