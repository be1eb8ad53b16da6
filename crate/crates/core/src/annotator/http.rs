//! Chat-completions HTTP backend.
//!
//! Request body: `{"model", "messages": [{"role", "content"}], "temperature"}`.
//! The answer is read from `choices[0].message.content`; `usage.prompt_tokens`
//! and `usage.completion_tokens` are used when present.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{BackendError, Completion, CompletionBackend, Usage};
use crate::prompting::AnnotationRequest;

pub const DEFAULT_API_KEY_ENV: &str = "OPENAI_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    pub url: String,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout_ms: u64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            url: "https://api.openai.com/v1/chat/completions".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            timeout_ms: 60_000,
        }
    }
}

pub struct HttpBackend {
    client: reqwest::blocking::Client,
    url: reqwest::Url,
    api_key: Option<String>,
}

impl HttpBackend {
    /// Builds the client. A missing credential variable is not an error here;
    /// endpoints that need it will answer 401.
    pub fn new(cfg: &HttpConfig) -> Result<Self, BackendError> {
        let url = reqwest::Url::parse(&cfg.url)
            .map_err(|e| BackendError::Fatal(format!("invalid endpoint url {:?}: {e}", cfg.url)))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build()
            .map_err(|e| BackendError::Fatal(e.to_string()))?;
        let api_key = std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty());
        Ok(HttpBackend {
            client,
            url,
            api_key,
        })
    }

    pub fn has_credentials(&self) -> bool {
        self.api_key.is_some()
    }
}

/// Wire body for one request.
pub fn request_body(request: &AnnotationRequest) -> serde_json::Value {
    json!({
        "model": request.model_name,
        "messages": request.messages,
        "temperature": request.temperature,
    })
}

#[derive(Deserialize)]
struct WireMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    usage: Option<Usage>,
}

/// Extracts `choices[0].message.content` and usage from a response body.
pub fn parse_wire_response(body: &str) -> Result<Completion, BackendError> {
    let wire: WireResponse = serde_json::from_str(body)
        .map_err(|e| BackendError::Transient(format!("malformed response: {e}")))?;
    let content = wire
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| BackendError::Transient("response has no choices[0].message.content".into()))?;
    Ok(Completion {
        content,
        usage: wire.usage,
    })
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, request: &AnnotationRequest, _attempt: u32) -> Result<Completion, BackendError> {
        let mut builder = self.client.post(self.url.clone()).json(&request_body(request));
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let resp = builder
            .send()
            .map_err(|e| BackendError::Transient(e.to_string()))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| BackendError::Transient(e.to_string()))?;
        if status.is_success() {
            return parse_wire_response(&text);
        }
        let msg = format!("HTTP {status}: {}", text.chars().take(200).collect::<String>());
        if status.as_u16() == 429 || status.as_u16() == 408 || status.is_server_error() {
            Err(BackendError::Transient(msg))
        } else {
            Err(BackendError::Fatal(msg))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompting::{build_request, RequestConfig};

    #[test]
    fn wire_body_shape() {
        let rec = crate::ingest::ChatRecord {
            id: "x".into(),
            source: "s".into(),
            language: "en".into(),
            text: "hi".into(),
            context: vec![],
            original_label: "0".into(),
            human_binary: crate::taxonomy::BinaryLabel::NonToxic,
        };
        let r = build_request(&rec, &RequestConfig::default()).unwrap();
        let body = request_body(&r);
        assert_eq!(body["model"], "gpt-4o-mini");
        assert_eq!(body["temperature"], 0.7);
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][1]["role"], "user");
        assert_eq!(body["messages"][1]["content"], "CONTEXT: NONE\nCURRENT_LINE: hi");
        assert_eq!(body.as_object().unwrap().len(), 3);
    }

    #[test]
    fn wire_response_parsing() {
        let c = parse_wire_response(
            r#"{"id":"x","choices":[{"index":0,"message":{"role":"assistant","content":"ok"}}],"usage":{"prompt_tokens":5,"completion_tokens":1,"total_tokens":6}}"#,
        )
        .unwrap();
        assert_eq!(c.content, "ok");
        assert_eq!(c.usage.unwrap().prompt_tokens, 5);
        assert!(parse_wire_response(r#"{"choices":[]}"#).is_err());
        assert!(parse_wire_response("not json").is_err());
    }

    #[test]
    fn bad_url_is_fatal() {
        let cfg = HttpConfig {
            url: "not a url".into(),
            ..HttpConfig::default()
        };
        assert!(matches!(HttpBackend::new(&cfg), Err(BackendError::Fatal(_))));
    }
}
