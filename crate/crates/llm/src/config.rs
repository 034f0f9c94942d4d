//! Client configuration with layered sources: CLI flags over config file
//! over environment.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::client::LlmError;

pub const ENV_API_BASE: &str = "LLM_API_BASE";
pub const ENV_API_KEY: &str = "LLM_API_KEY";
pub const ENV_MODEL: &str = "LLM_MODEL";

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientConfig {
    pub api_base: String,
    pub api_key: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub parallelism: usize,
    /// First backoff delay; later retries double it.
    pub retry_base_ms: u64,
}

impl std::fmt::Debug for ClientConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClientConfig")
            .field("api_base", &self.api_base)
            .field("api_key", &redact(&self.api_key))
            .field("model", &self.model)
            .field("temperature", &self.temperature)
            .field("timeout_secs", &self.timeout_secs)
            .field("max_retries", &self.max_retries)
            .field("parallelism", &self.parallelism)
            .field("retry_base_ms", &self.retry_base_ms)
            .finish()
    }
}

/// Key shown in logs: empty, `***`, or `***` plus the last four characters
/// of long keys.
pub fn redact(key: &str) -> String {
    let n = key.chars().count();
    if n == 0 {
        String::new()
    } else if n < 12 {
        "***".into()
    } else {
        let tail: String = key.chars().skip(n - 4).collect();
        format!("***{tail}")
    }
}

impl ClientConfig {
    pub fn new(api_base: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            api_base: api_base.into(),
            api_key: String::new(),
            model: model.into(),
            temperature: 0.0,
            timeout_secs: 60.0,
            max_retries: 3,
            parallelism: 4,
            retry_base_ms: 1000,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.parallelism == 0 {
            return Err(LlmError::Config("parallelism must be at least 1".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(LlmError::Config("temperature must be >= 0".into()));
        }
        if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 {
            return Err(LlmError::Config("timeout must be positive".into()));
        }
        Ok(())
    }
}

/// One configuration source; unset fields defer to lower layers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigLayer {
    pub api_base: Option<String>,
    pub api_key: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub timeout_secs: Option<f64>,
    pub max_retries: Option<u32>,
    pub parallelism: Option<usize>,
    pub retry_base_ms: Option<u64>,
}

impl ConfigLayer {
    pub fn from_env() -> Self {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Self {
        let nonempty = |k| get(k).filter(|v: &String| !v.trim().is_empty());
        Self {
            api_base: nonempty(ENV_API_BASE),
            api_key: nonempty(ENV_API_KEY),
            model: nonempty(ENV_MODEL),
            ..Self::default()
        }
    }

    /// TOML, or JSON when the file ends in `.json`. A `[llm]` table is used
    /// when present, so one file can also carry pipeline settings.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let err = |m: String| LlmError::Config(format!("{}: {m}", path.display()));
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
            let v = v.get("llm").cloned().unwrap_or(v);
            serde_json::from_value(v).map_err(|e| err(e.to_string()))
        } else {
            let v: toml::Table = toml::from_str(&text).map_err(|e| err(e.to_string()))?;
            let v = match v.get("llm") {
                Some(toml::Value::Table(t)) => t.clone(),
                _ => v,
            };
            v.try_into().map_err(|e: toml::de::Error| err(e.to_string()))
        }
    }

    /// Fields set in `higher` win.
    pub fn overlay(self, higher: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            api_base: higher.api_base.or(self.api_base),
            api_key: higher.api_key.or(self.api_key),
            model: higher.model.or(self.model),
            temperature: higher.temperature.or(self.temperature),
            timeout_secs: higher.timeout_secs.or(self.timeout_secs),
            max_retries: higher.max_retries.or(self.max_retries),
            parallelism: higher.parallelism.or(self.parallelism),
            retry_base_ms: higher.retry_base_ms.or(self.retry_base_ms),
        }
    }

    pub fn resolve(self) -> Result<ClientConfig, LlmError> {
        let api_base = self.api_base.ok_or_else(|| {
            LlmError::Config(format!(
                "no API base URL: set {ENV_API_BASE}, `api_base` in the config file, or pass --api-base"
            ))
        })?;
        let model = self.model.ok_or_else(|| {
            LlmError::Config(format!(
                "no model: set {ENV_MODEL}, `model` in the config file, or pass --model"
            ))
        })?;
        let mut cfg = ClientConfig::new(api_base, model);
        cfg.api_key = self.api_key.unwrap_or_default();
        if let Some(v) = self.temperature {
            cfg.temperature = v;
        }
        if let Some(v) = self.timeout_secs {
            cfg.timeout_secs = v;
        }
        if let Some(v) = self.max_retries {
            cfg.max_retries = v;
        }
        if let Some(v) = self.parallelism {
            cfg.parallelism = v;
        }
        if let Some(v) = self.retry_base_ms {
            cfg.retry_base_ms = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_cli_over_file_over_env() {
        let env = ConfigLayer::from_lookup(|k| match k {
            ENV_API_BASE => Some("http://env".into()),
            ENV_MODEL => Some("env-model".into()),
            ENV_API_KEY => Some("env-key".into()),
            _ => None,
        });
        let file = ConfigLayer {
            model: Some("file-model".into()),
            parallelism: Some(2),
            ..Default::default()
        };
        let cli = ConfigLayer {
            api_base: Some("http://cli".into()),
            ..Default::default()
        };
        let cfg = env.overlay(file).overlay(cli).resolve().unwrap();
        assert_eq!(cfg.api_base, "http://cli");
        assert_eq!(cfg.model, "file-model");
        assert_eq!(cfg.api_key, "env-key");
        assert_eq!(cfg.parallelism, 2);
        assert_eq!(cfg.temperature, 0.0);
        assert_eq!(cfg.max_retries, 3);
    }

    #[test]
    fn missing_base_is_config_error() {
        let err = ConfigLayer::from_lookup(|_| None).resolve().unwrap_err();
        assert!(matches!(err, LlmError::Config(ref m) if m.contains(ENV_API_BASE)));
    }

    #[test]
    fn invalid_values() {
        let layer = ConfigLayer {
            api_base: Some("http://x".into()),
            model: Some("m".into()),
            parallelism: Some(0),
            ..Default::default()
        };
        assert!(layer.resolve().is_err());
    }

    #[test]
    fn key_is_redacted_in_debug() {
        let mut cfg = ClientConfig::new("http://x", "m");
        cfg.api_key = "sk-secret-value-1234".into();
        let shown = format!("{cfg:?}");
        assert!(!shown.contains("secret"));
        assert!(shown.contains("***1234"));
    }

    #[test]
    fn file_layer_reads_llm_table() {
        let dir = std::env::temp_dir().join(format!("clinorm-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("c.toml");
        std::fs::write(&p, "seed = 3\n[llm]\nmodel = \"m\"\nmax_retries = 1\n").unwrap();
        let layer = ConfigLayer::from_file(&p).unwrap();
        assert_eq!(layer.model.as_deref(), Some("m"));
        assert_eq!(layer.max_retries, Some(1));
        std::fs::remove_dir_all(&dir).ok();
    }
}
