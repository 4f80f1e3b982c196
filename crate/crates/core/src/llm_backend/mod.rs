//! Text-completion backends.
//!
//! [`Backend::Deterministic`] never produces free text: callers check
//! [`Backend::is_deterministic`] and run their rule engines instead.

use std::collections::VecDeque;
use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub mod contract;
mod remote;

pub use remote::RemoteBackend;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
pub const DEFAULT_MAX_RETRIES: u32 = 2;
pub const DEFAULT_BACKOFF_BASE: Duration = Duration::from_secs(1);
pub const DEFAULT_MODEL: &str = "gpt-4";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Deterministic,
    Stub,
    Remote,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Deterministic => "deterministic",
            BackendKind::Stub => "stub",
            BackendKind::Remote => "remote",
        }
    }
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "deterministic" => Ok(Self::Deterministic),
            "stub" => Ok(Self::Stub),
            "remote" => Ok(Self::Remote),
            other => Err(format!("unknown backend '{other}'")),
        }
    }
}

/// API key wrapper that never prints its contents.
#[derive(Clone, PartialEq, Eq)]
pub struct Secret(String);

impl Secret {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret(***)")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    pub api_key: Option<Secret>,
    pub model: String,
    pub timeout: Duration,
    pub max_retries: u32,
    pub temperature: f64,
    /// First retry delay; doubles on each further retry.
    pub backoff_base: Duration,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Deterministic,
            endpoint: None,
            api_key: None,
            model: DEFAULT_MODEL.to_string(),
            timeout: DEFAULT_TIMEOUT,
            max_retries: DEFAULT_MAX_RETRIES,
            temperature: 0.0,
            backoff_base: DEFAULT_BACKOFF_BASE,
        }
    }
}

impl BackendConfig {
    pub fn remote(endpoint: impl Into<String>, api_key: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::Remote,
            endpoint: Some(endpoint.into()),
            api_key: Some(Secret::new(api_key)),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.timeout.is_zero() {
            return Err(LlmError::Config("timeout must be positive".into()));
        }
        if self.kind == BackendKind::Remote {
            if self.endpoint.as_deref().is_none_or(|e| e.trim().is_empty()) {
                return Err(LlmError::Config("remote backend needs an endpoint".into()));
            }
            if self.api_key.as_ref().is_none_or(|k| k.expose().is_empty()) {
                return Err(LlmError::Config("remote backend needs an api key".into()));
            }
            if !self.temperature.is_finite() || self.temperature < 0.0 {
                return Err(LlmError::Config("temperature must be a non-negative number".into()));
            }
        }
        Ok(())
    }

    /// Delay before retry number `retry` (1-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        self.backoff_base.saturating_mul(1u32 << (retry - 1).min(16))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("endpoint answered HTTP {code}: {body}")]
    Status { code: u16, body: String },
    #[error("gave up after {attempts} attempt(s): {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("stub script exhausted")]
    ScriptExhausted,
    #[error("unusable response: {0}")]
    BadResponse(String),
    #[error("invalid backend configuration: {0}")]
    Config(String),
    #[error("deterministic backend has no free-text completion")]
    NoCompletion,
    #[error("scripted failure: {0}")]
    Scripted(String),
}

/// One completion attempt as seen by the call log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallRecord {
    /// 1-based attempt number within one `complete` call.
    pub attempt: u32,
    pub outcome: Result<(), String>,
}

#[derive(Debug, Clone, Default)]
pub struct CallLog(Arc<Mutex<Vec<CallRecord>>>);

impl CallLog {
    pub fn push(&self, record: CallRecord) {
        self.0.lock().unwrap_or_else(|e| e.into_inner()).push(record);
    }

    pub fn records(&self) -> Vec<CallRecord> {
        self.0.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn attempts(&self) -> usize {
        self.records().len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StubReply {
    Text(String),
    Fail(String),
}

#[derive(Debug, Default)]
struct StubState {
    script: VecDeque<StubReply>,
    repeat: Option<StubReply>,
    prompts: Vec<String>,
}

/// Scripted backend; calls are served in order under a lock.
#[derive(Debug, Default)]
pub struct StubBackend {
    state: Mutex<StubState>,
}

impl StubBackend {
    pub fn scripted<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let stub = Self::default();
        for r in replies {
            stub.push(StubReply::Text(r.into()));
        }
        stub
    }

    /// Answers every call with `reply` once the script runs out.
    pub fn repeating(reply: impl Into<String>) -> Self {
        let stub = Self::default();
        stub.lock().repeat = Some(StubReply::Text(reply.into()));
        stub
    }

    pub fn failing(message: impl Into<String>) -> Self {
        let stub = Self::default();
        stub.lock().repeat = Some(StubReply::Fail(message.into()));
        stub
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, StubState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn push(&self, reply: StubReply) {
        self.lock().script.push_back(reply);
    }

    /// Prompts received so far, in call order.
    pub fn prompts(&self) -> Vec<String> {
        self.lock().prompts.clone()
    }

    pub fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let mut st = self.lock();
        st.prompts.push(prompt.to_string());
        let reply = st.script.pop_front().or_else(|| st.repeat.clone());
        match reply {
            Some(StubReply::Text(t)) => Ok(t),
            Some(StubReply::Fail(m)) => Err(LlmError::Scripted(m)),
            None => Err(LlmError::ScriptExhausted),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub enum Backend {
    #[default]
    Deterministic,
    Stub(Arc<StubBackend>),
    Remote(Arc<RemoteBackend>),
}

impl Backend {
    /// Builds a backend; a stub built here starts with an empty script.
    pub fn from_config(config: &BackendConfig) -> Result<Self, LlmError> {
        config.validate()?;
        Ok(match config.kind {
            BackendKind::Deterministic => Backend::Deterministic,
            BackendKind::Stub => Backend::Stub(Arc::new(StubBackend::default())),
            BackendKind::Remote => Backend::Remote(Arc::new(RemoteBackend::new(config.clone())?)),
        })
    }

    pub fn stub(stub: StubBackend) -> Self {
        Backend::Stub(Arc::new(stub))
    }

    pub fn kind(&self) -> BackendKind {
        match self {
            Backend::Deterministic => BackendKind::Deterministic,
            Backend::Stub(_) => BackendKind::Stub,
            Backend::Remote(_) => BackendKind::Remote,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Backend::Deterministic)
    }

    pub fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        match self {
            Backend::Deterministic => Err(LlmError::NoCompletion),
            Backend::Stub(s) => s.complete(prompt),
            Backend::Remote(r) => r.complete(prompt),
        }
    }
}
