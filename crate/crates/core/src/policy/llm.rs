//! Chat-completions client: one HTTP call per expansion attempt, with
//! exponential backoff on transport errors, 429 and 5xx.

use std::time::Duration;

use serde::Serialize;
use serde_json::{json, Value as Json};

use super::{Message, Policy, PolicyError, PolicyReply, PolicyRequest, Usage};

#[derive(Debug, Clone, PartialEq)]
pub struct LlmConfig {
    /// Base URL such as `https://api.example.com/v1`, or the full
    /// `.../chat/completions` URL.
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout: Duration,
    /// Total transport attempts per expansion, first try included.
    pub max_attempts: u32,
    pub backoff_base: Duration,
}

impl LlmConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        LlmConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            temperature: 0.0,
            max_tokens: 1024,
            timeout: Duration::from_secs(60),
            max_attempts: 4,
            backoff_base: Duration::from_millis(500),
        }
    }

    pub fn url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [Message],
    temperature: f64,
    max_tokens: u32,
}

/// Cloning shares the underlying connection pool.
#[derive(Debug, Clone)]
pub struct LlmPolicy {
    config: LlmConfig,
    client: reqwest::blocking::Client,
}

enum Outcome {
    Done(Json),
    Retry(String),
    Fatal(PolicyError),
}

impl LlmPolicy {
    pub fn new(config: LlmConfig) -> Result<Self, PolicyError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| PolicyError::Transport {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(LlmPolicy { config, client })
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    pub fn request_body(&self, messages: &[Message]) -> Json {
        serde_json::to_value(ChatRequest {
            model: &self.config.model,
            messages,
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        })
        .expect("request serializes")
    }

    fn send_once(&self, body: &Json) -> Outcome {
        let mut req = self.client.post(self.config.url()).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) => return Outcome::Retry(e.to_string()),
        };
        let status = resp.status().as_u16();
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) => return Outcome::Retry(e.to_string()),
        };
        match status {
            200..=299 => match serde_json::from_str(&text) {
                Ok(v) => Outcome::Done(v),
                Err(e) => Outcome::Fatal(PolicyError::Protocol(format!("body is not JSON: {e}"))),
            },
            401 | 403 => Outcome::Fatal(PolicyError::Auth { status }),
            429 | 500..=599 => Outcome::Retry(format!("HTTP {status}")),
            _ => Outcome::Fatal(PolicyError::Http { status, body: text }),
        }
    }
}

fn parse_completion(body: &Json) -> Result<(String, Option<(u64, u64)>), PolicyError> {
    let content = body
        .pointer("/choices/0/message/content")
        .and_then(Json::as_str)
        .ok_or_else(|| PolicyError::Protocol("missing choices[0].message.content".into()))?;
    let usage = body.get("usage").and_then(|u| {
        Some((
            u.get("prompt_tokens")?.as_u64()?,
            u.get("completion_tokens")?.as_u64()?,
        ))
    });
    Ok((content.to_string(), usage))
}

impl Policy for LlmPolicy {
    fn complete(&mut self, _req: &PolicyRequest, messages: &[Message]) -> Result<PolicyReply, PolicyError> {
        let body = self.request_body(messages);
        let mut log = Vec::new();
        let max = self.config.max_attempts.max(1);
        for attempt in 1..=max {
            match self.send_once(&body) {
                Outcome::Done(resp) => {
                    log.push(json!({"attempt": attempt, "result": "ok"}));
                    let (raw, usage) = parse_completion(&resp)?;
                    let usage = match usage {
                        Some((p, c)) => Usage {
                            prompt_tokens: p,
                            completion_tokens: c,
                            estimated: false,
                        },
                        None => Usage::estimate(messages, &raw),
                    };
                    return Ok(PolicyReply {
                        raw,
                        usage,
                        transport: Some(json!({"request": body, "response": resp, "attempts": log})),
                    });
                }
                Outcome::Fatal(e) => return Err(e),
                Outcome::Retry(message) => {
                    tracing::warn!(attempt, %message, "chat completion attempt failed");
                    log.push(json!({"attempt": attempt, "result": message}));
                    if attempt == max {
                        return Err(PolicyError::Transport { attempts: attempt, message });
                    }
                    std::thread::sleep(self.config.backoff_base * 2u32.pow(attempt - 1));
                }
            }
        }
        unreachable!("loop returns on the last attempt")
    }

    fn is_remote(&self) -> bool {
        true
    }
}
