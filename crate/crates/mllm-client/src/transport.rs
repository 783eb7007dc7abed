use std::sync::{Arc, Condvar, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::ModelEndpointConfig;
use crate::retry::RetryPolicy;
use crate::ClientError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageUrl {
    pub url: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Part {
    Text { text: String },
    ImageUrl { image_url: ImageUrl },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Content {
    Text(String),
    Parts(Vec<Part>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: Content,
}

impl Message {
    pub fn system(text: impl Into<String>) -> Self {
        Self { role: "system".into(), content: Content::Text(text.into()) }
    }

    pub fn user(text: impl Into<String>) -> Self {
        Self { role: "user".into(), content: Content::Text(text.into()) }
    }

    /// User turn with text followed by image data URLs.
    pub fn user_with_images(text: impl Into<String>, urls: Vec<String>) -> Self {
        if urls.is_empty() {
            return Self::user(text);
        }
        let mut parts = vec![Part::Text { text: text.into() }];
        parts.extend(urls.into_iter().map(|url| Part::ImageUrl { image_url: ImageUrl { url } }));
        Self { role: "user".into(), content: Content::Parts(parts) }
    }
}

/// Body of a chat-completions POST.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
}

impl ChatRequest {
    /// Canonical serialization: object keys sorted, no whitespace.
    pub fn canonical(&self) -> String {
        // serde_json's default map is ordered by key
        let value = serde_json::to_value(self).expect("request serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Sends a chat request and returns the first choice's message text.
pub trait Transport: Send + Sync {
    fn send(&self, request: &ChatRequest) -> Result<String, ClientError>;
}

impl<T: Transport + ?Sized> Transport for Arc<T> {
    fn send(&self, request: &ChatRequest) -> Result<String, ClientError> {
        (**self).send(request)
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
pub struct InFlightLimiter {
    limit: usize,
    used: Mutex<usize>,
    freed: Condvar,
}

pub struct Permit<'a>(&'a InFlightLimiter);

impl InFlightLimiter {
    pub fn new(limit: usize) -> Self {
        Self { limit: limit.max(1), used: Mutex::new(0), freed: Condvar::new() }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut used = self.used.lock().expect("limiter lock");
        while *used >= self.limit {
            used = self.freed.wait(used).expect("limiter lock");
        }
        *used += 1;
        Permit(self)
    }

    pub fn in_use(&self) -> usize {
        *self.used.lock().expect("limiter lock")
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.used.lock().expect("limiter lock") -= 1;
        self.0.freed.notify_one();
    }
}

/// Blocking HTTP transport with retry and an in-flight bound. Share one
/// instance across all episodes to make the bound process-wide.
pub struct HttpTransport {
    config: ModelEndpointConfig,
    api_key: String,
    policy: RetryPolicy,
    limiter: InFlightLimiter,
    agent: ureq::Agent,
}

enum Failure {
    Retryable(String),
    Fatal(String),
}

impl HttpTransport {
    /// Validates the config and reads the API key up front.
    pub fn new(config: ModelEndpointConfig) -> Result<Self, ClientError> {
        let policy = RetryPolicy::standard(config.timeout(), config.max_retries);
        Self::with_policy(config, policy)
    }

    pub fn with_policy(config: ModelEndpointConfig, policy: RetryPolicy) -> Result<Self, ClientError> {
        config.validate()?;
        let api_key = config.api_key()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout()))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            limiter: InFlightLimiter::new(config.max_in_flight),
            config,
            api_key,
            policy,
            agent,
        })
    }

    pub fn config(&self) -> &ModelEndpointConfig {
        &self.config
    }

    fn attempt(&self, request: &ChatRequest) -> Result<String, Failure> {
        let _permit = self.limiter.acquire();
        let response = self
            .agent
            .post(&self.config.endpoint())
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(request);
        let mut response = match response {
            Ok(r) => r,
            Err(e @ (ureq::Error::Timeout(_) | ureq::Error::Io(_) | ureq::Error::ConnectionFailed)) => {
                return Err(Failure::Retryable(e.to_string()))
            }
            Err(e) => return Err(Failure::Fatal(e.to_string())),
        };
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| Failure::Retryable(format!("reading body: {e}")))?;
        match status {
            200..=299 => first_choice_text(&body).map_err(Failure::Fatal),
            429 | 500..=599 => Err(Failure::Retryable(format!("HTTP {status}"))),
            _ => Err(Failure::Fatal(format!("HTTP {status}: {}", truncate(&body, 200)))),
        }
    }
}

impl Transport for HttpTransport {
    fn send(&self, request: &ChatRequest) -> Result<String, ClientError> {
        let mut rng = rand::rng();
        let mut retry = 0;
        loop {
            match self.attempt(request) {
                Ok(text) => return Ok(text),
                Err(Failure::Fatal(msg)) => return Err(ClientError::Transport(msg)),
                Err(Failure::Retryable(msg)) => {
                    if retry >= self.policy.max_retries {
                        return Err(ClientError::RetriesExhausted { attempts: retry + 1, last: msg });
                    }
                    std::thread::sleep(self.policy.delay(retry, &mut rng));
                    retry += 1;
                }
            }
        }
    }
}

/// Extracts `choices[0].message.content` from a chat-completions body.
pub fn first_choice_text(body: &str) -> Result<String, String> {
    let value: Value = serde_json::from_str(body).map_err(|e| format!("response is not JSON: {e}"))?;
    match value.pointer("/choices/0/message/content") {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Array(parts)) => Ok(parts
            .iter()
            .filter_map(|p| p.get("text").and_then(Value::as_str))
            .collect::<Vec<_>>()
            .join("")),
        _ => Err("response has no choices[0].message.content".into()),
    }
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_construction_order() {
        let a = ChatRequest { model: "m".into(), messages: vec![Message::user("hi")], temperature: 0.0 };
        let text = r#"{"temperature":0.0,"messages":[{"content":"hi","role":"user"}],"model":"m"}"#;
        let b: ChatRequest = serde_json::from_str(text).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn choice_text_extraction() {
        assert_eq!(first_choice_text(r#"{"choices":[{"message":{"content":"ok"}}]}"#).unwrap(), "ok");
        assert!(first_choice_text("{}").is_err());
        assert!(first_choice_text("nope").is_err());
    }

    #[test]
    fn limiter_counts() {
        let l = InFlightLimiter::new(2);
        let a = l.acquire();
        let _b = l.acquire();
        assert_eq!(l.in_use(), 2);
        drop(a);
        assert_eq!(l.in_use(), 1);
    }
}
