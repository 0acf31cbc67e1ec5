use std::time::Duration;

use serde_json::{json, Value};

use crate::error::{Error, Result};

use super::{Backend, BackendError, BackendKind, RephraseRequest};

pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";
pub const API_KEY_ENV: &str = "DETEXT_API_KEY";

#[derive(Clone, Debug, PartialEq)]
pub struct HttpConfig {
    /// Base URL; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model: String,
    /// Left to the endpoint's default when unset.
    pub temperature: Option<f64>,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl HttpConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        HttpConfig {
            base_url: base_url.into(),
            model: DEFAULT_MODEL.into(),
            temperature: None,
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            timeout: Duration::from_secs(60),
        }
    }
}

/// Client for a chat-completions endpoint.
pub struct HttpBackend {
    url: String,
    config: HttpConfig,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self> {
        let base = config.base_url.trim_end_matches('/');
        if !(base.starts_with("http://") || base.starts_with("https://")) {
            return Err(Error::Config(format!("backend url {:?} is not http(s)", config.base_url)));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        Ok(HttpBackend {
            url: format!("{base}/chat/completions"),
            config,
            agent,
        })
    }

    fn body(&self, prompt: &str) -> Value {
        let mut body = json!({
            "model": self.config.model,
            "messages": [{ "role": "user", "content": prompt }],
        });
        if let Some(t) = self.config.temperature {
            body["temperature"] = json!(t);
        }
        body
    }
}

fn first_choice(v: &Value) -> Option<&str> {
    v.get("choices")?.get(0)?.get("message")?.get("content")?.as_str()
}

impl Backend for HttpBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Http
    }

    fn complete(&self, request: &RephraseRequest) -> std::result::Result<String, BackendError> {
        let mut req = self.agent.post(&self.url);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(self.body(&request.prompt)).map_err(|e| BackendError::Transient {
            status: None,
            message: e.to_string(),
        })?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(BackendError::Transient {
                status: Some(status),
                message: format!("HTTP {status}"),
            });
        }
        if !(200..300).contains(&status) {
            let detail = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(BackendError::Fatal {
                status: Some(status),
                message: format!("HTTP {status}: {}", detail.chars().take(200).collect::<String>()),
            });
        }
        let v: Value = resp.body_mut().read_json().map_err(|e| BackendError::Transient {
            status: Some(status),
            message: format!("unreadable response body: {e}"),
        })?;
        first_choice(&v).map(str::to_string).ok_or_else(|| BackendError::Fatal {
            status: Some(status),
            message: "response has no choices[0].message.content".into(),
        })
    }
}
