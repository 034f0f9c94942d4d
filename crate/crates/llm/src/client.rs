//! Chat-completion backend trait and the HTTP implementation with retries.

use std::sync::Arc;
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use rand::Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{redact, ClientConfig};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },
    #[error("authentication rejected (HTTP {status}); check LLM_API_KEY")]
    Auth { status: u16 },
    #[error("rate limited after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("server error HTTP {status} after {attempts} attempt(s)")]
    Server { status: u16, attempts: u32 },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("empty completion")]
    EmptyCompletion,
    #[error("malformed response: {0}")]
    Decode(String),
    #[error("prompt: {0}")]
    Prompt(String),
    #[error("invalid output: {0}")]
    Output(String),
}

impl LlmError {
    fn retryable(&self) -> bool {
        matches!(
            self,
            LlmError::Transport { .. } | LlmError::RateLimited { .. } | LlmError::Server { .. }
        )
    }

    fn with_attempts(self, n: u32) -> Self {
        match self {
            LlmError::Transport { message, .. } => LlmError::Transport { message, attempts: n },
            LlmError::RateLimited { .. } => LlmError::RateLimited { attempts: n },
            LlmError::Server { status, .. } => LlmError::Server { status, attempts: n },
            e => e,
        }
    }
}

/// Anything that turns a (system, user) message pair into a completion.
pub trait ChatBackend: Sync {
    fn complete(&self, system: &str, user: &str) -> Result<String, LlmError>;
}

impl<B: ChatBackend + Send + ?Sized> ChatBackend for Arc<B> {
    fn complete(&self, system: &str, user: &str) -> Result<String, LlmError> {
        (**self).complete(system, user)
    }
}

/// Delay before retry `k` (0-based): `base * 2^k` scaled by `u` in [0.5, 1].
pub fn backoff_delay(base: Duration, k: u32, u: f64) -> Duration {
    let nominal = base.saturating_mul(1u32.checked_shl(k.min(20)).unwrap_or(u32::MAX));
    nominal.mul_f64(u.clamp(0.5, 1.0))
}

type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

pub struct HttpChatClient {
    cfg: ClientConfig,
    agent: ureq::Agent,
    sleeper: Sleeper,
}

impl std::fmt::Debug for HttpChatClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpChatClient").field("cfg", &self.cfg).finish()
    }
}

impl HttpChatClient {
    pub fn new(cfg: ClientConfig) -> Result<Self, LlmError> {
        cfg.validate()?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(cfg.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            cfg,
            agent,
            sleeper: Arc::new(thread::sleep),
        })
    }

    /// Replace the sleep used between retries, e.g. to record the schedule.
    pub fn with_sleeper(mut self, f: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleeper = Arc::new(f);
        self
    }

    pub fn config(&self) -> &ClientConfig {
        &self.cfg
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.cfg.api_base.trim_end_matches('/'))
    }

    fn attempt(&self, body: &str) -> Result<String, LlmError> {
        let mut req = self
            .agent
            .post(self.endpoint())
            .header("Content-Type", "application/json");
        if !self.cfg.api_key.is_empty() {
            req = req.header("Authorization", format!("Bearer {}", self.cfg.api_key));
        }
        let mut resp = req.send(body).map_err(|e| LlmError::Transport {
            message: e.to_string(),
            attempts: 1,
        })?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| LlmError::Transport {
            message: e.to_string(),
            attempts: 1,
        })?;
        debug!("response HTTP {status}: {} bytes", text.len());
        match status {
            200..=299 => parse_completion(&text),
            401 | 403 => Err(LlmError::Auth { status }),
            429 => Err(LlmError::RateLimited { attempts: 1 }),
            500..=599 => Err(LlmError::Server { status, attempts: 1 }),
            _ => Err(LlmError::Http {
                status,
                body: text.chars().take(200).collect(),
            }),
        }
    }
}

pub fn request_body(model: &str, system: &str, user: &str, temperature: f64) -> Value {
    json!({
        "model": model,
        "messages": [
            {"role": "system", "content": system},
            {"role": "user", "content": user},
        ],
        "temperature": temperature,
    })
}

/// Trimmed `choices[0].message.content`.
pub fn parse_completion(text: &str) -> Result<String, LlmError> {
    let v: Value = serde_json::from_str(text).map_err(|e| LlmError::Decode(e.to_string()))?;
    let content = v
        .pointer("/choices/0/message/content")
        .ok_or_else(|| LlmError::Decode("missing choices[0].message.content".into()))?;
    let s = match content {
        Value::String(s) => s.trim(),
        Value::Null => "",
        _ => return Err(LlmError::Decode("content is not a string".into())),
    };
    if s.is_empty() {
        return Err(LlmError::EmptyCompletion);
    }
    Ok(s.to_string())
}

impl ChatBackend for HttpChatClient {
    fn complete(&self, system: &str, user: &str) -> Result<String, LlmError> {
        let body = request_body(&self.cfg.model, system, user, self.cfg.temperature).to_string();
        debug!(
            "POST {} model={} key={} body={}",
            self.endpoint(),
            self.cfg.model,
            redact(&self.cfg.api_key),
            body
        );
        let base = Duration::from_millis(self.cfg.retry_base_ms);
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body) {
                Ok(s) => return Ok(s),
                Err(e) if e.retryable() && attempts <= self.cfg.max_retries => {
                    let delay = backoff_delay(base, attempts - 1, rand::thread_rng().gen_range(0.5..=1.0));
                    warn!("attempt {attempts} failed ({e}); retrying in {delay:?}");
                    (self.sleeper)(delay);
                }
                Err(e) => return Err(e.with_attempts(attempts)),
            }
        }
    }
}
