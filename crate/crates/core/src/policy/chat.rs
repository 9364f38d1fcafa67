//! Provider-agnostic chat-completion client.
//!
//! Requests follow the widely implemented `POST {base_url}/chat/completions`
//! shape: model id, sampling parameters, a message list and optional function
//! tools. Responses are reduced to the assistant text and its tool calls.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Environment variable holding the endpoint base URL.
pub const ENV_ENDPOINT_URL: &str = "SOCIETY_LLM_URL";
/// Environment variable holding the bearer credential.
pub const ENV_API_KEY: &str = "SOCIETY_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChatEndpointConfig {
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
}

impl Default for ChatEndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:8000/v1".into(),
            model: "openai/gpt-oss-120b".into(),
            temperature: 1.0,
            top_p: 0.95,
            timeout_secs: 300.0,
            max_retries: 3,
            backoff_base_ms: 500,
        }
    }
}

impl ChatEndpointConfig {
    pub fn validate(&self) -> Result<(), ChatError> {
        if self.temperature < 0.0 || !self.temperature.is_finite() {
            return Err(ChatError::Config("temperature must be >= 0".into()));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(ChatError::Config("top_p must be in (0, 1]".into()));
        }
        if self.timeout_secs <= 0.0 || !self.timeout_secs.is_finite() {
            return Err(ChatError::Config("timeout must be positive".into()));
        }
        if self.base_url.trim().is_empty() {
            return Err(ChatError::Config("base_url is empty".into()));
        }
        Ok(())
    }

    /// Overrides `base_url` from the environment when set.
    pub fn with_env(mut self) -> Self {
        if let Ok(url) = std::env::var(ENV_ENDPOINT_URL) {
            if !url.trim().is_empty() {
                self.base_url = url;
            }
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: "system".into(), content: content.into() }
    }
    pub fn user(content: impl Into<String>) -> Self {
        Self { role: "user".into(), content: content.into() }
    }
    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: "assistant".into(), content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    /// JSON schema of the arguments object.
    pub parameters: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    pub messages: Vec<ChatMessage>,
    pub tools: Vec<ToolSpec>,
}

impl ChatRequest {
    /// Wire body. With tools, exactly one call is required and parallel calls are disabled.
    pub fn to_wire(&self) -> Value {
        let mut body = json!({
            "model": self.model,
            "temperature": self.temperature,
            "top_p": self.top_p,
            "messages": self.messages,
        });
        if !self.tools.is_empty() {
            body["tools"] = Value::Array(
                self.tools
                    .iter()
                    .map(|t| {
                        json!({"type": "function", "function": {
                            "name": t.name, "description": t.description, "parameters": t.parameters}})
                    })
                    .collect(),
            );
            body["tool_choice"] = json!("required");
            body["parallel_tool_calls"] = json!(false);
        }
        body
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCall {
    pub name: String,
    /// Raw JSON text of the arguments object.
    pub arguments: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: Option<String>,
    pub tool_calls: Vec<ToolCall>,
}

impl ChatResponse {
    pub fn from_wire(body: &Value) -> Result<ChatResponse, ChatError> {
        let message = body
            .pointer("/choices/0/message")
            .ok_or_else(|| ChatError::Malformed("response has no choices[0].message".into()))?;
        let content = message.get("content").and_then(Value::as_str).map(str::to_string);
        let tool_calls = message
            .get("tool_calls")
            .and_then(Value::as_array)
            .map(|calls| {
                calls
                    .iter()
                    .filter_map(|c| {
                        let f = c.get("function")?;
                        let name = f.get("name")?.as_str()?.to_string();
                        let arguments = match f.get("arguments") {
                            Some(Value::String(s)) => s.clone(),
                            Some(other) => other.to_string(),
                            None => "{}".into(),
                        };
                        Some(ToolCall { name, arguments })
                    })
                    .collect()
            })
            .unwrap_or_default();
        Ok(ChatResponse { content, tool_calls })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChatError {
    #[error("endpoint configuration: {0}")]
    Config(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("timed out")]
    Timeout,
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl ChatError {
    pub fn is_retryable(&self) -> bool {
        match self {
            ChatError::Transport(_) | ChatError::Timeout => true,
            ChatError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

pub trait ChatTransport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ChatError>;
}

/// Blocking HTTP transport with exponential backoff on rate limits, server
/// errors and timeouts.
pub struct HttpChatClient {
    config: ChatEndpointConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpChatClient {
    /// The credential is read from [`ENV_API_KEY`] only.
    pub fn new(config: ChatEndpointConfig) -> Result<Self, ChatError> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| ChatError::Config(e.to_string()))?;
        let api_key = std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
        Ok(Self { config, api_key, client })
    }

    pub fn config(&self) -> &ChatEndpointConfig {
        &self.config
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, body: &Value) -> Result<ChatResponse, ChatError> {
        let mut req = self.client.post(self.url()).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                ChatError::Timeout
            } else {
                ChatError::Transport(e.to_string())
            }
        })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| ChatError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ChatError::Status { status: status.as_u16(), body: text.chars().take(500).collect() });
        }
        let value: Value = serde_json::from_str(&text).map_err(|e| ChatError::Malformed(e.to_string()))?;
        ChatResponse::from_wire(&value)
    }
}

impl ChatTransport for HttpChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ChatError> {
        let body = request.to_wire();
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Err(e) if e.is_retryable() && attempt < self.config.max_retries => {
                    let delay = self.config.backoff_base_ms.saturating_mul(1 << attempt.min(16));
                    std::thread::sleep(Duration::from_millis(delay));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

/// Transport that replays a fixed sequence of replies, then repeats the last
/// one. Used for offline runs and tests.
pub struct CannedTransport {
    replies: Vec<Result<ChatResponse, ChatError>>,
    calls: std::sync::Mutex<usize>,
}

impl CannedTransport {
    pub fn new(replies: Vec<Result<ChatResponse, ChatError>>) -> Self {
        assert!(!replies.is_empty(), "at least one reply required");
        Self { replies, calls: std::sync::Mutex::new(0) }
    }

    /// Always answers with a single tool call.
    pub fn tool_call(name: &str, arguments: Value) -> Self {
        Self::new(vec![Ok(ChatResponse {
            content: None,
            tool_calls: vec![ToolCall { name: name.into(), arguments: arguments.to_string() }],
        })])
    }

    pub fn calls(&self) -> usize {
        *self.calls.lock().unwrap_or_else(|e| e.into_inner())
    }
}

impl ChatTransport for CannedTransport {
    fn complete(&self, _request: &ChatRequest) -> Result<ChatResponse, ChatError> {
        let mut calls = self.calls.lock().unwrap_or_else(|e| e.into_inner());
        let reply = self.replies[(*calls).min(self.replies.len() - 1)].clone();
        *calls += 1;
        reply
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_request_requires_single_tool_call() {
        let req = ChatRequest {
            model: "m".into(),
            temperature: 1.0,
            top_p: 0.95,
            messages: vec![ChatMessage::user("hi")],
            tools: vec![ToolSpec {
                name: "rest".into(),
                description: "d".into(),
                parameters: json!({"type": "object"}),
            }],
        };
        let wire = req.to_wire();
        assert_eq!(wire["tool_choice"], "required");
        assert_eq!(wire["parallel_tool_calls"], false);
        assert_eq!(wire["tools"][0]["function"]["name"], "rest");
        assert_eq!(wire["top_p"], 0.95);
    }

    #[test]
    fn response_parsing_accepts_string_and_object_arguments() {
        let body = json!({"choices": [{"message": {"content": null, "tool_calls": [
            {"type": "function", "function": {"name": "move", "arguments": "{\"direction\": \"N\"}"}},
            {"type": "function", "function": {"name": "rest", "arguments": {}}}
        ]}}]});
        let resp = ChatResponse::from_wire(&body).unwrap();
        assert_eq!(resp.tool_calls.len(), 2);
        assert_eq!(resp.tool_calls[1].arguments, "{}");
        assert!(ChatResponse::from_wire(&json!({"error": "x"})).is_err());
    }

    #[test]
    fn retry_classification() {
        assert!(ChatError::Status { status: 429, body: String::new() }.is_retryable());
        assert!(ChatError::Status { status: 503, body: String::new() }.is_retryable());
        assert!(!ChatError::Status { status: 400, body: String::new() }.is_retryable());
        assert!(ChatError::Timeout.is_retryable());
    }

    #[test]
    fn config_validation() {
        assert!(ChatEndpointConfig::default().validate().is_ok());
        let bad = ChatEndpointConfig { temperature: -0.1, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ChatEndpointConfig { timeout_secs: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
