//! Config files (TOML or JSON) and layering with command-line values.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::BackendConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("missing setting {0}")]
    Missing(&'static str),
    #[error("invalid setting {0}")]
    Invalid(String),
}

/// Backend settings where every field may be left unset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendOverrides {
    pub base_url: Option<String>,
    pub model_name: Option<String>,
    pub top_p: Option<f64>,
    pub want_logprobs: Option<bool>,
    pub system_message: Option<String>,
    pub max_retries: Option<u32>,
    /// Seconds.
    pub timeout: Option<f64>,
    pub api_key_env: Option<String>,
    /// Seconds.
    pub backoff_base: Option<f64>,
    pub max_in_flight: Option<usize>,
    pub requests_per_second: Option<f64>,
}

macro_rules! layer {
    ($hi:ident, $lo:ident, $($f:ident),*) => {
        BackendOverrides { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl BackendOverrides {
    /// Fields set in `self` win over those in `lower`.
    pub fn over(self, lower: BackendOverrides) -> BackendOverrides {
        layer!(
            self, lower, base_url, model_name, top_p, want_logprobs, system_message, max_retries,
            timeout, api_key_env, backoff_base, max_in_flight, requests_per_second
        )
    }

    pub fn build(self) -> Result<BackendConfig, ConfigError> {
        let secs = |name: &str, v: f64| {
            Duration::try_from_secs_f64(v).map_err(|_| ConfigError::Invalid(format!("{name} = {v}")))
        };
        let mut c = BackendConfig::new(
            self.base_url.ok_or(ConfigError::Missing("base_url"))?,
            self.model_name.ok_or(ConfigError::Missing("model_name"))?,
        );
        if let Some(v) = self.top_p {
            c.top_p = v;
        }
        if let Some(v) = self.want_logprobs {
            c.want_logprobs = v;
        }
        if let Some(v) = self.system_message {
            c.system_message = v;
        }
        if let Some(v) = self.max_retries {
            c.max_retries = v;
        }
        if let Some(v) = self.timeout {
            c.timeout = secs("timeout", v)?;
        }
        if let Some(v) = self.backoff_base {
            c.backoff_base = secs("backoff_base", v)?;
        }
        if let Some(v) = self.max_in_flight {
            c.max_in_flight = v;
        }
        c.api_key_env = self.api_key_env;
        c.requests_per_second = self.requests_per_second;
        c.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub backend: BackendOverrides,
    pub cache_dir: Option<PathBuf>,
}

/// Parse by extension: `.json` as JSON, anything else as TOML.
pub fn load_config(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parse = |message: String| ConfigError::Parse {
        path: path.to_path_buf(),
        message,
    };
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| parse(e.to_string()))
    } else {
        toml::from_str(&text).map_err(|e| parse(e.to_string()))
    }
}
