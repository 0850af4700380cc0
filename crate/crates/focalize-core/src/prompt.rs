//! Zero-shot prompt templates, request constants and log-probability confidence.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// System message sent with every request.
pub const SYSTEM_MESSAGE: &str = "You are a helpful assistant.";
/// Nucleus sampling mass sent with every request.
pub const DEFAULT_TOP_P: f64 = 0.1;
/// Separator between the template body and the excerpt.
pub const EXCERPT_HEADING: &str = "\n\nEXCERPT:\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptId {
    Base,
    V1,
    V2,
    V3,
    V4,
    V5,
}

pub const PROMPT_IDS: [PromptId; 6] = [
    PromptId::Base,
    PromptId::V1,
    PromptId::V2,
    PromptId::V3,
    PromptId::V4,
    PromptId::V5,
];

impl PromptId {
    pub fn name(self) -> &'static str {
        match self {
            PromptId::Base => "base",
            PromptId::V1 => "v1",
            PromptId::V2 => "v2",
            PromptId::V3 => "v3",
            PromptId::V4 => "v4",
            PromptId::V5 => "v5",
        }
    }

    fn body(self) -> &'static str {
        match self {
            PromptId::Base => include_str!("../prompts/base.txt"),
            PromptId::V1 => include_str!("../prompts/v1.txt"),
            PromptId::V2 => include_str!("../prompts/v2.txt"),
            PromptId::V3 => include_str!("../prompts/v3.txt"),
            PromptId::V4 => include_str!("../prompts/v4.txt"),
            PromptId::V5 => include_str!("../prompts/v5.txt"),
        }
    }
}

impl fmt::Display for PromptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown prompt {0:?} (expected base, v1, v2, v3, v4 or v5)")]
pub struct UnknownPrompt(pub String);

impl FromStr for PromptId {
    type Err = UnknownPrompt;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PROMPT_IDS
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| UnknownPrompt(s.into()))
    }
}

/// A prompt body; the excerpt is appended after an `EXCERPT:` heading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: PromptId,
    pub body: String,
}

impl PromptTemplate {
    pub fn builtin(id: PromptId) -> Self {
        Self {
            id,
            body: id.body().into(),
        }
    }

    pub fn render(&self, excerpt_text: &str) -> String {
        build_prompt(self, excerpt_text)
    }
}

/// `body + "\n\nEXCERPT:\n" + excerpt`, byte for byte, no truncation.
pub fn build_prompt(template: &PromptTemplate, excerpt_text: &str) -> String {
    let mut out =
        String::with_capacity(template.body.len() + EXCERPT_HEADING.len() + excerpt_text.len());
    out.push_str(&template.body);
    out.push_str(EXCERPT_HEADING);
    out.push_str(excerpt_text);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("log-probability {0} is not a valid log of a probability")]
pub struct InvalidLogprob(pub f64);

/// `p = e^l` for the first generated token. `-inf` means the backend gave no
/// usable value and yields `None`, never 0.
pub fn confidence_from_logprob(logprob: f64) -> Result<Option<f64>, InvalidLogprob> {
    if logprob == f64::NEG_INFINITY {
        return Ok(None);
    }
    if logprob.is_nan() || logprob > 0.0 {
        return Err(InvalidLogprob(logprob));
    }
    Ok(Some(libm::exp(logprob)))
}
