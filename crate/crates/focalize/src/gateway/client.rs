//! Blocking client for OpenAI-compatible `/chat/completions` endpoints.

use std::io::Read;
use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::Duration;

use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BackendConfig, GatewayError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatMessage<'a> {
    pub role: &'a str,
    pub content: &'a str,
}

/// Request body. Sampling fields other than `top_p` are left to the backend.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest<'a> {
    pub model: &'a str,
    pub messages: Vec<ChatMessage<'a>>,
    pub top_p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub logprobs: Option<bool>,
}

impl<'a> ChatRequest<'a> {
    pub fn new(config: &'a BackendConfig, user_message: &'a str) -> Self {
        Self {
            model: &config.model_name,
            messages: vec![
                ChatMessage {
                    role: "system",
                    content: &config.system_message,
                },
                ChatMessage {
                    role: "user",
                    content: user_message,
                },
            ],
            top_p: config.top_p,
            logprobs: config.want_logprobs.then_some(true),
        }
    }
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    #[serde(default)]
    model: Option<String>,
    #[serde(default)]
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: Option<ResponseMessage>,
    #[serde(default)]
    logprobs: Option<ChoiceLogprobs>,
}

#[derive(Debug, Deserialize)]
struct ResponseMessage {
    content: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ChoiceLogprobs {
    #[serde(default)]
    content: Option<Vec<TokenLogprob>>,
}

#[derive(Debug, Deserialize)]
struct TokenLogprob {
    logprob: f64,
}

/// What a completion produced, as stored in the cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub raw_text: String,
    /// Log-probability of the first generated token, when returned.
    pub first_token_logprob: Option<f64>,
    pub model_name_echo: String,
    /// SHA-256 of the exact request body.
    pub request_fingerprint: String,
}

/// Extract content and first-token logprob. Unknown fields are ignored.
pub fn parse_completion(
    body: &str,
    requested_model: &str,
    fingerprint: String,
) -> Result<CompletionResult, GatewayError> {
    let resp: ChatResponse = serde_json::from_str(body)
        .map_err(|e| GatewayError::MalformedResponse(format!("invalid JSON: {e}")))?;
    let choice = resp
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| GatewayError::MalformedResponse("no choices".into()))?;
    let raw_text = choice
        .message
        .and_then(|m| m.content)
        .ok_or_else(|| GatewayError::MalformedResponse("choice has no message content".into()))?;
    let first_token_logprob = choice
        .logprobs
        .and_then(|l| l.content)
        .and_then(|c| c.into_iter().next())
        .map(|t| t.logprob);
    if let Some(l) = first_token_logprob {
        if l.is_nan() || l > 0.0 {
            return Err(GatewayError::MalformedResponse(format!(
                "positive log-probability {l}"
            )));
        }
    }
    Ok(CompletionResult {
        raw_text,
        first_token_logprob,
        model_name_echo: resp.model.unwrap_or_else(|| requested_model.to_string()),
        request_fingerprint: fingerprint,
    })
}

/// HTTP client with retry/backoff and request counters.
pub struct ChatClient {
    config: BackendConfig,
    agent: ureq::Agent,
    api_key: Option<String>,
    attempts: AtomicU64,
    retries: AtomicU64,
}

impl ChatClient {
    /// Reads the API key from the configured environment variable, if any.
    pub fn new(config: BackendConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let api_key = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var)
                    .ok()
                    .filter(|v| !v.is_empty())
                    .ok_or_else(|| GatewayError::MissingApiKey(var.clone()))?,
            ),
            None => None,
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            config,
            agent,
            api_key,
            attempts: AtomicU64::new(0),
            retries: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    /// HTTP requests sent so far (retries included).
    pub fn attempts(&self) -> u64 {
        self.attempts.load(Ordering::Relaxed)
    }

    pub fn retries(&self) -> u64 {
        self.retries.load(Ordering::Relaxed)
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    /// Send system + user message. Retries 429, 5xx and timeouts up to
    /// `max_retries` times with exponential backoff.
    pub fn complete(&self, user_message: &str) -> Result<CompletionResult, GatewayError> {
        let body = serde_json::to_vec(&ChatRequest::new(&self.config, user_message))
            .expect("request serializes");
        let fingerprint = hex::encode(Sha256::digest(&body));
        let mut attempt = 0u32;
        loop {
            match self.send_once(&body) {
                Ok(text) => {
                    return parse_completion(&text, &self.config.model_name, fingerprint);
                }
                Err(e) if e.is_retryable() && attempt < self.config.max_retries => {
                    let delay = self.config.backoff_base * 2u32.pow(attempt);
                    attempt += 1;
                    self.retries.fetch_add(1, Ordering::Relaxed);
                    warn!(
                        "retry {attempt}/{} after {e}; waiting {delay:?}",
                        self.config.max_retries
                    );
                    thread::sleep(delay);
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn send_once(&self, body: &[u8]) -> Result<String, GatewayError> {
        self.attempts.fetch_add(1, Ordering::Relaxed);
        let mut req = self
            .agent
            .post(&self.endpoint())
            .header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let resp = req.send(body).map_err(map_transport_error)?;
        let status = resp.status().as_u16();
        let mut text = String::new();
        resp.into_body()
            .into_reader()
            .read_to_string(&mut text)
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        match status {
            200..=299 => Ok(text),
            401 | 403 => Err(GatewayError::Auth(status)),
            _ => Err(GatewayError::Http {
                status,
                body: text.chars().take(500).collect(),
            }),
        }
    }
}

fn map_transport_error(e: ureq::Error) -> GatewayError {
    match e {
        ureq::Error::Timeout(t) => GatewayError::Timeout(t.to_string()),
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => {
            GatewayError::Timeout(io.to_string())
        }
        other => GatewayError::Transport(other.to_string()),
    }
}

/// Backoff delay before retry `n` (0-based).
pub fn backoff_delay(base: Duration, retry: u32) -> Duration {
    base * 2u32.pow(retry)
}
