// SPDX-License-Identifier: Apache-2.0

//! Text-completion backends: an OpenAI-style HTTP client and a replay store
//! keyed by the SHA-256 of the prompt.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::Stage;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletionParams {
    pub stage: Stage,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
}

impl CompletionParams {
    pub fn for_stage(stage: Stage) -> CompletionParams {
        CompletionParams {
            stage,
            temperature: 0.0,
            max_tokens: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("no replay fixture for prompt {hash} in {dir}")]
    MissingFixture { hash: String, dir: String },
    #[error("cannot read replay fixture {path}: {message}")]
    Io { path: String, message: String },
    #[error("http request failed: {0}")]
    Http(String),
    #[error("http status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed completion response: {0}")]
    Malformed(String),
}

pub trait LlmBackend: Send + Sync {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, BackendError>;

    /// Short name used in logs and reports.
    fn identity(&self) -> String;
}

/// Lowercase hex SHA-256 of the prompt; the replay fixture file stem.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Replays canned responses. Lookups go to an in-memory table first and then
/// to `<dir>/<prompt_hash>.txt`.
#[derive(Debug, Default)]
pub struct ReplayBackend {
    dir: Option<PathBuf>,
    memory: RwLock<HashMap<String, String>>,
}

impl ReplayBackend {
    pub fn new(dir: impl Into<PathBuf>) -> ReplayBackend {
        ReplayBackend {
            dir: Some(dir.into()),
            memory: RwLock::default(),
        }
    }

    pub fn in_memory() -> ReplayBackend {
        ReplayBackend::default()
    }

    pub fn insert(&self, prompt: &str, response: impl Into<String>) {
        self.memory
            .write()
            .expect("replay table lock")
            .insert(prompt_hash(prompt), response.into());
    }

    /// Writes a fixture file for `prompt` and returns its path.
    pub fn record(dir: &Path, prompt: &str, response: &str) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.txt", prompt_hash(prompt)));
        std::fs::write(&path, response)?;
        Ok(path)
    }
}

impl LlmBackend for ReplayBackend {
    fn complete(&self, prompt: &str, _params: &CompletionParams) -> Result<String, BackendError> {
        let hash = prompt_hash(prompt);
        if let Some(hit) = self.memory.read().expect("replay table lock").get(&hash) {
            return Ok(hit.clone());
        }
        let Some(dir) = &self.dir else {
            return Err(BackendError::MissingFixture {
                hash,
                dir: "<memory>".into(),
            });
        };
        let path = dir.join(format!("{hash}.txt"));
        match std::fs::read_to_string(&path) {
            Ok(text) => Ok(text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(BackendError::MissingFixture {
                hash,
                dir: dir.display().to_string(),
            }),
            Err(e) => Err(BackendError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            }),
        }
    }

    fn identity(&self) -> String {
        match &self.dir {
            Some(dir) => format!("replay:{}", dir.display()),
            None => "replay:memory".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpConfig {
    /// Full chat-completions endpoint URL.
    pub url: String,
    pub model: String,
    pub key: Option<String>,
    pub request_timeout: Duration,
}

impl HttpConfig {
    pub const DEFAULT_MODEL: &'static str = "gpt-3.5-turbo";

    /// Reads `PIPEFORGE_LLM_URL`, `PIPEFORGE_LLM_MODEL` and
    /// `PIPEFORGE_LLM_KEY`.
    pub fn from_env() -> Result<HttpConfig, BackendError> {
        let url = std::env::var("PIPEFORGE_LLM_URL")
            .ok()
            .filter(|u| !u.trim().is_empty())
            .ok_or_else(|| BackendError::Config("PIPEFORGE_LLM_URL is not set".into()))?;
        Ok(HttpConfig {
            url,
            model: std::env::var("PIPEFORGE_LLM_MODEL").unwrap_or_else(|_| Self::DEFAULT_MODEL.into()),
            key: std::env::var("PIPEFORGE_LLM_KEY").ok().filter(|k| !k.is_empty()),
            request_timeout: Duration::from_secs(120),
        })
    }
}

/// Chat-completions client (`{"model", "messages", "temperature"}` in,
/// `choices[0].message.content` out).
#[derive(Debug, Clone)]
pub struct HttpBackend {
    config: HttpConfig,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> HttpBackend {
        HttpBackend { config }
    }
}

impl LlmBackend for HttpBackend {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, BackendError> {
        // Built per call: a blocking client must not live inside an async
        // runtime, and calls arrive from worker threads.
        let client = reqwest::blocking::Client::builder()
            .timeout(self.config.request_timeout)
            .build()
            .map_err(|e| BackendError::Http(e.to_string()))?;
        let mut body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
        });
        if let Some(max) = params.max_tokens {
            body["max_tokens"] = json!(max);
        }
        let mut request = client.post(&self.config.url).json(&body);
        if let Some(key) = &self.config.key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| BackendError::Http(e.to_string()))?;
        let status = response.status();
        let text = response.text().map_err(|e| BackendError::Http(e.to_string()))?;
        if !status.is_success() {
            let mut body = text;
            body.truncate(500);
            return Err(BackendError::Status {
                status: status.as_u16(),
                body,
            });
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| BackendError::Malformed(e.to_string()))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| BackendError::Malformed("missing choices[0].message.content".into()))
    }

    fn identity(&self) -> String {
        format!("http:{}", self.config.model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Http,
    Replay,
}

impl FromStr for BackendKind {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "http" => Ok(BackendKind::Http),
            "replay" => Ok(BackendKind::Replay),
            other => Err(BackendError::Config(format!(
                "unknown backend `{other}` (expected http or replay)"
            ))),
        }
    }
}

/// Builds a backend. `kind` falls back to `PIPEFORGE_LLM_BACKEND`, then to
/// replay; `replay_dir` defaults to `fixtures/replay`.
pub fn backend_from_env(
    kind: Option<BackendKind>,
    replay_dir: Option<PathBuf>,
) -> Result<Arc<dyn LlmBackend>, BackendError> {
    let kind = match kind {
        Some(k) => k,
        None => match std::env::var("PIPEFORGE_LLM_BACKEND") {
            Ok(v) if !v.is_empty() => v.parse()?,
            _ => BackendKind::Replay,
        },
    };
    Ok(match kind {
        BackendKind::Http => Arc::new(HttpBackend::new(HttpConfig::from_env()?)),
        BackendKind::Replay => Arc::new(ReplayBackend::new(
            replay_dir.unwrap_or_else(|| PathBuf::from("fixtures/replay")),
        )),
    })
}
