//! LLM annotation over OpenAI-compatible chat-completions backends.

mod batch;
mod cache;
mod client;
mod limiter;

use std::time::Duration;

use focalize_core::prompt::{DEFAULT_TOP_P, SYSTEM_MESSAGE};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use batch::{annotator_id, BatchOutput, BatchStats, Gateway};
pub use cache::{CacheKey, CachedCompletion, ResponseCache};
pub use client::{backoff_delay, parse_completion, ChatClient, ChatMessage, ChatRequest, CompletionResult};
pub use limiter::TokenBucket;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid backend configuration: {0}")]
    InvalidConfig(String),
    #[error("API key variable {0} is not set")]
    MissingApiKey(String),
    #[error("backend rejected credentials (HTTP {0})")]
    Auth(u16),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("cache error at {path}: {source}")]
    Cache {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl GatewayError {
    /// 429, 5xx and timeouts.
    pub fn is_retryable(&self) -> bool {
        match self {
            GatewayError::Http { status, .. } => *status == 429 || (500..600).contains(status),
            GatewayError::Timeout(_) => true,
            _ => false,
        }
    }

    /// Errors that make every further request pointless.
    pub fn is_fatal(&self) -> bool {
        matches!(
            self,
            GatewayError::Auth(_)
                | GatewayError::MissingApiKey(_)
                | GatewayError::InvalidConfig(_)
                | GatewayError::Cache { .. }
        )
    }
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub base_url: String,
    pub model_name: String,
    #[serde(default = "default_top_p")]
    pub top_p: f64,
    #[serde(default = "default_true")]
    pub want_logprobs: bool,
    #[serde(default = "default_system")]
    pub system_message: String,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Per-request timeout in seconds.
    #[serde(default = "default_timeout", with = "secs")]
    pub timeout: Duration,
    /// Name of the environment variable holding the bearer token.
    #[serde(default)]
    pub api_key_env: Option<String>,
    /// First retry delay in seconds; doubles on each retry.
    #[serde(default = "default_backoff", with = "secs")]
    pub backoff_base: Duration,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    /// Token-bucket refill rate; unlimited when absent.
    #[serde(default)]
    pub requests_per_second: Option<f64>,
}

fn default_top_p() -> f64 {
    DEFAULT_TOP_P
}
fn default_true() -> bool {
    true
}
fn default_system() -> String {
    SYSTEM_MESSAGE.into()
}
fn default_retries() -> u32 {
    3
}
fn default_timeout() -> Duration {
    Duration::from_secs(60)
}
fn default_backoff() -> Duration {
    Duration::from_secs(1)
}
fn default_in_flight() -> usize {
    4
}

impl BackendConfig {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model_name: model_name.into(),
            top_p: default_top_p(),
            want_logprobs: true,
            system_message: default_system(),
            max_retries: default_retries(),
            timeout: default_timeout(),
            api_key_env: None,
            backoff_base: default_backoff(),
            max_in_flight: default_in_flight(),
            requests_per_second: None,
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |m: &str| Err(GatewayError::InvalidConfig(m.into()));
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad("top_p must be in (0, 1]");
        }
        if self.base_url.trim().is_empty() {
            return bad("base_url is empty");
        }
        if self.model_name.trim().is_empty() {
            return bad("model_name is empty");
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1");
        }
        if let Some(r) = self.requests_per_second {
            if !(r.is_finite() && r > 0.0) {
                return bad("requests_per_second must be positive");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        let c = BackendConfig::new("http://localhost:1", "m");
        assert_eq!(c.top_p, 0.1);
        assert!(c.want_logprobs);
        assert_eq!(c.max_retries, 3);
        assert_eq!(c.system_message, "You are a helpful assistant.");
        c.validate().unwrap();
        for p in [0.0, -0.1, 1.5, f64::NAN] {
            let mut bad = c.clone();
            bad.top_p = p;
            assert!(bad.validate().is_err(), "{p}");
        }
        let mut one = c.clone();
        one.top_p = 1.0;
        one.validate().unwrap();
    }

    #[test]
    fn config_from_toml() {
        let c: BackendConfig = toml::from_str(
            "base_url = \"http://h\"\nmodel_name = \"gpt-4o\"\ntimeout = 2.5\napi_key_env = \"OPENAI_API_KEY\"\n",
        )
        .unwrap();
        assert_eq!(c.timeout, Duration::from_millis(2500));
        assert_eq!(c.top_p, 0.1);
        assert_eq!(c.api_key_env.as_deref(), Some("OPENAI_API_KEY"));
        assert!(toml::from_str::<BackendConfig>("base_url = \"h\"\nmodel_name = \"m\"\ntemperature = 1\n").is_err());
    }

    #[test]
    fn retryable_classes() {
        let http = |status| GatewayError::Http { status, body: String::new() };
        assert!(http(429).is_retryable());
        assert!(http(503).is_retryable());
        assert!(!http(400).is_retryable());
        assert!(GatewayError::Timeout("t".into()).is_retryable());
        assert!(!GatewayError::Auth(401).is_retryable());
        assert!(GatewayError::Auth(401).is_fatal());
    }
}
