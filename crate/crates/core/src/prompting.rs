//! Versioned moderation prompt and per-record request assembly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ingest::ChatRecord;

const V1_ASSET: &str = include_str!("../assets/prompts/v1.txt");

/// Marker used in place of context lines when a record has none.
pub const EMPTY_CONTEXT_MARKER: &str = "NONE";

pub const DEFAULT_TEMPERATURE: f64 = 0.7;
pub const DEFAULT_MODEL: &str = "gpt-4o-mini";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PromptError {
    #[error("unsupported prompt version {0:?}")]
    UnsupportedVersion(String),
    #[error("temperature {0} outside [0, 2]")]
    Temperature(f64),
    #[error("record {0} has empty text")]
    EmptyText(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum PromptVersion {
    #[default]
    #[serde(rename = "v1")]
    V1,
}

impl PromptVersion {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptVersion::V1 => "v1",
        }
    }

    pub fn system_text(self) -> &'static str {
        match self {
            // asset file ends with a newline that is not part of the prompt
            PromptVersion::V1 => V1_ASSET.strip_suffix('\n').unwrap_or(V1_ASSET),
        }
    }
}

impl FromStr for PromptVersion {
    type Err = PromptError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "v1" | "1" => Ok(PromptVersion::V1),
            _ => Err(PromptError::UnsupportedVersion(s.to_string())),
        }
    }
}

impl fmt::Display for PromptVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Returns the stored system prompt for `version` verbatim.
pub fn render_system_prompt(version: &str) -> Result<&'static str, PromptError> {
    Ok(version.parse::<PromptVersion>()?.system_text())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestConfig {
    #[serde(default)]
    pub prompt_version: PromptVersion,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_model")]
    pub model_name: String,
}

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}

fn default_model() -> String {
    DEFAULT_MODEL.to_string()
}

impl Default for RequestConfig {
    fn default() -> Self {
        RequestConfig {
            prompt_version: PromptVersion::V1,
            temperature: DEFAULT_TEMPERATURE,
            model_name: DEFAULT_MODEL.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRequest {
    pub record_id: String,
    /// Exactly two messages: system first, then user.
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub model_name: String,
}

impl AnnotationRequest {
    pub fn system(&self) -> &str {
        &self.messages[0].content
    }

    pub fn user(&self) -> &str {
        &self.messages[1].content
    }
}

/// Renders the user turn:
///
/// ```text
/// CONTEXT:
/// <oldest line>
/// ...
/// <newest line>
/// CURRENT_LINE: <text>
/// ```
///
/// With no context the first section is the single line `CONTEXT: NONE`.
pub fn render_user_message(text: &str, context: &[String]) -> String {
    let mut out = String::with_capacity(text.len() + 32);
    if context.is_empty() {
        out.push_str("CONTEXT: ");
        out.push_str(EMPTY_CONTEXT_MARKER);
        out.push('\n');
    } else {
        out.push_str("CONTEXT:\n");
        for line in context {
            out.push_str(line);
            out.push('\n');
        }
    }
    out.push_str("CURRENT_LINE: ");
    out.push_str(text);
    out
}

pub fn build_request(
    record: &ChatRecord,
    config: &RequestConfig,
) -> Result<AnnotationRequest, PromptError> {
    if record.text.trim().is_empty() {
        return Err(PromptError::EmptyText(record.id.clone()));
    }
    if !(0.0..=2.0).contains(&config.temperature) {
        return Err(PromptError::Temperature(config.temperature));
    }
    Ok(AnnotationRequest {
        record_id: record.id.clone(),
        messages: vec![
            ChatMessage {
                role: Role::System,
                content: config.prompt_version.system_text().to_string(),
            },
            ChatMessage {
                role: Role::User,
                content: render_user_message(&record.text, &record.context),
            },
        ],
        temperature: config.temperature,
        model_name: config.model_name.clone(),
    })
}
