//! Append-only run manifests with input and output digests.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::gateway::BackendConfig;
use crate::io::{file_digest, DataError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self, DataError> {
        Ok(Self {
            path: path.to_path_buf(),
            sha256: file_digest(path)?,
        })
    }
}

/// Backend settings as recorded in a manifest. Only the name of the API key
/// variable is kept, never its value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSnapshot {
    pub base_url: String,
    pub model_name: String,
    pub top_p: f64,
    pub want_logprobs: bool,
    pub system_message: String,
    pub max_retries: u32,
    pub api_key_env: Option<String>,
    pub api_key: Option<String>,
}

impl From<&BackendConfig> for BackendSnapshot {
    fn from(c: &BackendConfig) -> Self {
        Self {
            base_url: c.base_url.clone(),
            model_name: c.model_name.clone(),
            top_p: c.top_p,
            want_logprobs: c.want_logprobs,
            system_message: c.system_message.clone(),
            max_retries: c.max_retries,
            api_key_env: c.api_key_env.clone(),
            api_key: c.api_key_env.as_ref().map(|_| "<redacted>".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    /// Full argument vector, program name excluded.
    pub args: Vec<String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<BackendSnapshot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_id: Option<String>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
}

impl RunManifest {
    pub fn start(command: &str, args: Vec<String>) -> Self {
        let started_at = Utc::now();
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        for a in &args {
            h.update([0]);
            h.update(a.as_bytes());
        }
        h.update(started_at.to_rfc3339_opts(SecondsFormat::Nanos, true).as_bytes());
        h.update(std::process::id().to_le_bytes());
        Self {
            run_id: hex::encode(&h.finalize()[..8]),
            command: command.into(),
            args,
            inputs: Vec::new(),
            outputs: Vec::new(),
            backend: None,
            prompt_id: None,
            started_at,
            finished_at: started_at,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), DataError> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> Result<(), DataError> {
        self.outputs.push(FileDigest::of(path)?);
        Ok(())
    }

    /// Stamp the finish time and append one JSON line to `path`.
    pub fn finish(mut self, path: &Path) -> Result<Self, DataError> {
        self.finished_at = Utc::now();
        let io = |source| DataError::Io {
            path: path.to_path_buf(),
            source,
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        let mut line = serde_json::to_string(&self).expect("manifest serializes");
        line.push('\n');
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .and_then(|mut f| f.write_all(line.as_bytes()))
            .map_err(io)?;
        Ok(self)
    }
}

pub fn load_manifests(path: &Path) -> Result<Vec<RunManifest>, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| DataError::Schema {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// A recorded file whose current digest differs (or which is gone).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigestMismatch {
    pub path: PathBuf,
    pub expected: String,
    pub actual: Option<String>,
}

/// Recompute every recorded input and output digest.
pub fn verify_manifest(manifest: &RunManifest) -> Vec<DigestMismatch> {
    manifest
        .inputs
        .iter()
        .chain(&manifest.outputs)
        .filter_map(|f| {
            let actual = file_digest(&f.path).ok();
            (actual.as_deref() != Some(f.sha256.as_str())).then(|| DigestMismatch {
                path: f.path.clone(),
                expected: f.sha256.clone(),
                actual,
            })
        })
        .collect()
}
