use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::ClientError;

pub const DEFAULT_API_KEY_ENV: &str = "MLLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEndpointConfig {
    /// Server root; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model_name: String,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    /// Per-request timeout in seconds.
    pub timeout_s: f64,
    pub max_retries: usize,
    pub max_in_flight: usize,
    /// Attach candidate images as data URLs.
    #[serde(default)]
    pub supports_images: bool,
}

fn default_key_env() -> String {
    DEFAULT_API_KEY_ENV.to_string()
}

impl Default for ModelEndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8000/v1".into(),
            model_name: "default".into(),
            api_key_env: default_key_env(),
            timeout_s: 60.0,
            max_retries: 4,
            max_in_flight: 4,
            supports_images: false,
        }
    }
}

impl ModelEndpointConfig {
    pub fn validate(&self) -> Result<(), ClientError> {
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return Err(ClientError::Config(format!("timeout must be positive, got {}", self.timeout_s)));
        }
        if self.max_in_flight == 0 {
            return Err(ClientError::Config("max_in_flight must be at least 1".into()));
        }
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(ClientError::Config(format!("base_url `{}` is not an http(s) URL", self.base_url)));
        }
        if self.api_key_env.is_empty() {
            return Err(ClientError::Config("api_key_env is empty".into()));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s)
    }

    /// Reads the API key; fails naming the variable when it is unset or empty.
    pub fn api_key(&self) -> Result<String, ClientError> {
        match std::env::var(&self.api_key_env) {
            Ok(v) if !v.trim().is_empty() => Ok(v),
            _ => Err(ClientError::Config(format!(
                "environment variable {} is not set",
                self.api_key_env
            ))),
        }
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}
