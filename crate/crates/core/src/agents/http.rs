//! Client for a local OpenAI-compatible chat-completions server.

use std::thread;
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::{BackendError, GenerationParams, GenerationRequest, TextBackend};

/// First retry delay; each further retry doubles it.
pub const DEFAULT_BACKOFF_BASE: Duration = Duration::from_millis(250);

/// Environment variable that supplies the endpoint URL.
pub const ENDPOINT_ENV: &str = "LUCID_ENDPOINT";

const EXCERPT_LEN: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    /// Base URL, e.g. `http://127.0.0.1:8000`. `/v1/chat/completions` is appended.
    pub endpoint: String,
    pub model_name: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
}

fn default_timeout_ms() -> u64 {
    120_000
}

fn default_max_retries() -> u32 {
    3
}

impl HttpConfig {
    /// Default timeout and retry budget.
    pub fn new(endpoint: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model_name: model_name.into(),
            timeout_ms: default_timeout_ms(),
            max_retries: default_max_retries(),
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.timeout_ms == 0 {
            return Err(BackendError::Config("timeout_ms must be positive".into()));
        }
        reqwest::Url::parse(&self.endpoint)
            .map_err(|e| BackendError::Config(format!("invalid endpoint {:?}: {e}", self.endpoint)))?;
        Ok(())
    }

    pub fn completions_url(&self) -> String {
        format!("{}/v1/chat/completions", self.endpoint.trim_end_matches('/'))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    /// `system`, `user` or `assistant`.
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: &str, content: impl Into<String>) -> Self {
        Self {
            role: role.to_string(),
            content: content.into(),
        }
    }
}

/// Request body, field for field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub max_tokens: u32,
    pub temperature: f64,
    pub seed: u64,
}

pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
    backoff_base: Duration,
    last_retries: u32,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, BackendError> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(Self {
            config,
            client,
            backoff_base: DEFAULT_BACKOFF_BASE,
            last_retries: 0,
        })
    }

    pub fn with_backoff_base(mut self, base: Duration) -> Self {
        self.backoff_base = base;
        self
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    /// Retries spent by the most recent call.
    pub fn last_retries(&self) -> u32 {
        self.last_retries
    }

    /// Sends one chat-completions request and returns the first choice's text.
    ///
    /// Transport failures, timeouts and 5xx responses are retried up to
    /// `max_retries` times with doubling backoff. 4xx responses and malformed
    /// bodies fail immediately.
    pub fn chat(&mut self, messages: &[ChatMessage], params: &GenerationParams) -> Result<String, BackendError> {
        let body = ChatRequest {
            model: self.config.model_name.clone(),
            messages: messages.to_vec(),
            max_tokens: params.max_tokens,
            temperature: params.temperature,
            seed: params.seed,
        };
        let url = self.config.completions_url();
        self.last_retries = 0;
        let mut attempt: u32 = 0;
        loop {
            let failure = match self.client.post(&url).json(&body).send() {
                Err(e) => format!("transport error: {e}"),
                Ok(resp) => {
                    let status = resp.status();
                    let text = resp.text().unwrap_or_default();
                    if status.is_server_error() {
                        format!("HTTP {}: {}", status.as_u16(), excerpt(&text))
                    } else if status.is_client_error() {
                        return Err(BackendError::Request {
                            status: status.as_u16(),
                            body: excerpt(&text),
                        });
                    } else if status.is_success() {
                        return parse_completion(&text);
                    } else {
                        return Err(BackendError::Protocol {
                            excerpt: format!("unexpected HTTP {}: {}", status.as_u16(), excerpt(&text)),
                        });
                    }
                }
            };
            if attempt >= self.config.max_retries {
                return Err(BackendError::Unavailable {
                    attempts: attempt + 1,
                    reason: failure,
                });
            }
            let delay = self.backoff_base.saturating_mul(1u32 << attempt.min(16));
            warn!("chat request failed ({failure}); retry {} in {:?}", attempt + 1, delay);
            thread::sleep(delay);
            attempt += 1;
            self.last_retries = attempt;
        }
    }
}

impl TextBackend for HttpBackend {
    fn generate(&mut self, request: &GenerationRequest<'_>) -> Result<String, BackendError> {
        debug!("http generate role={} epoch={}", request.role, request.epoch);
        let messages = [
            ChatMessage::new("system", request.system),
            ChatMessage::new("user", request.user),
        ];
        self.chat(&messages, request.params)
    }
}

/// One-shot form: builds a client for `config` and sends `messages`.
pub fn http_generate(
    config: &HttpConfig,
    messages: &[ChatMessage],
    params: &GenerationParams,
) -> Result<String, BackendError> {
    HttpBackend::new(config.clone())?.chat(messages, params)
}

fn parse_completion(body: &str) -> Result<String, BackendError> {
    let value: serde_json::Value = serde_json::from_str(body).map_err(|_| BackendError::Protocol {
        excerpt: excerpt(body),
    })?;
    value
        .pointer("/choices/0/message/content")
        .and_then(|v| v.as_str())
        .map(str::to_string)
        .ok_or_else(|| BackendError::Protocol {
            excerpt: excerpt(body),
        })
}

fn excerpt(body: &str) -> String {
    body.chars().take(EXCERPT_LEN).collect()
}
