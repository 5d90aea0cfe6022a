//! Chat-completion backends: a live HTTP client, a mock that answers with
//! the deterministic oracle, and a mock that corrupts the oracle's output.

mod fault;
mod live;
mod mock;

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nl::NlFrontend;

pub use fault::{corrupt, FaultClass, FaultKind, FaultPlan, FaultProfile};
pub use live::LiveBackend;
pub use mock::{MockBackend, RETRY_PREFIX};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication error: {0}")]
    Auth(String),
    #[error("request budget of {limit} exceeded")]
    BudgetExceeded { limit: u64 },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("request carries no task marker")]
    UnknownTask,
    #[error("invalid backend config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        ChatMessage {
            role,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

pub const DEFAULT_MAX_TOKENS: u32 = 1024;

impl ChatRequest {
    /// Temperature 0 and the default token cap.
    pub fn new(model: impl Into<String>, messages: Vec<ChatMessage>) -> Self {
        assert!(!messages.is_empty(), "a chat request needs at least one message");
        ChatRequest {
            model: model.into(),
            messages,
            temperature: 0.0,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }

    /// Content of the final user message.
    pub fn last_user(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
    }
}

/// Pipeline step that issued a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskTag {
    Translate,
    BackTranslate,
    CompareStep1,
    CompareStep2,
    Repair,
}

impl TaskTag {
    pub const ALL: [TaskTag; 5] = [
        TaskTag::Translate,
        TaskTag::BackTranslate,
        TaskTag::CompareStep1,
        TaskTag::CompareStep2,
        TaskTag::Repair,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskTag::Translate => "translate",
            TaskTag::BackTranslate => "back-translate",
            TaskTag::CompareStep1 => "compare-step1",
            TaskTag::CompareStep2 => "compare-step2",
            TaskTag::Repair => "repair",
        }
    }

    pub fn parse(s: &str) -> Option<TaskTag> {
        TaskTag::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl fmt::Display for TaskTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Reads the `[[task:<tag>]]` marker from the first line of the final user message.
pub fn classify_request(request: &ChatRequest) -> Result<TaskTag, LlmError> {
    let first = request
        .last_user()
        .and_then(|c| c.lines().next())
        .ok_or(LlmError::UnknownTask)?;
    first
        .trim()
        .strip_prefix("[[task:")
        .and_then(|s| s.strip_suffix("]]"))
        .and_then(TaskTag::parse)
        .ok_or(LlmError::UnknownTask)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Live,
    PerfectMock,
    FaultyMock,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Live => "live",
            BackendKind::PerfectMock => "perfect-mock",
            BackendKind::FaultyMock => "faulty-mock",
        })
    }
}

/// Backend selection. The API key itself never appears here, only the name
/// of the environment variable holding it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: String,
    pub api_key_env: String,
    pub model: String,
    /// Seconds.
    pub request_timeout: f64,
    pub max_retries: u32,
    /// Initial backoff in milliseconds, doubled after every failed attempt.
    pub backoff_ms: u64,
    /// Cap on completed requests per backend instance.
    pub request_budget: Option<u64>,
    pub fault_profile: FaultProfile,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::PerfectMock,
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            model: "gpt-3.5-turbo".into(),
            request_timeout: 60.0,
            max_retries: 3,
            backoff_ms: 500,
            request_budget: None,
            fault_profile: FaultProfile::default(),
        }
    }
}

impl BackendConfig {
    pub fn perfect_mock() -> Self {
        BackendConfig::default()
    }

    pub fn faulty_mock(profile: FaultProfile) -> Self {
        BackendConfig {
            kind: BackendKind::FaultyMock,
            fault_profile: profile,
            ..BackendConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.kind == BackendKind::FaultyMock {
            self.fault_profile.validate()?;
        }
        if self.request_timeout.is_nan() || self.request_timeout <= 0.0 {
            return Err(LlmError::Config("request_timeout must be positive".into()));
        }
        Ok(())
    }
}

pub trait LlmBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError>;

    /// Requests accepted so far (one per `complete` call within budget).
    fn calls(&self) -> u64;

    fn kind(&self) -> BackendKind;
}

/// Atomic request counter with an optional cap.
#[derive(Debug)]
pub struct Budget {
    used: AtomicU64,
    limit: Option<u64>,
}

impl Budget {
    pub fn new(limit: Option<u64>) -> Self {
        Budget {
            used: AtomicU64::new(0),
            limit,
        }
    }

    pub fn acquire(&self) -> Result<(), LlmError> {
        let mut current = self.used.load(Ordering::SeqCst);
        loop {
            if let Some(limit) = self.limit {
                if current >= limit {
                    return Err(LlmError::BudgetExceeded { limit });
                }
            }
            match self
                .used
                .compare_exchange(current, current + 1, Ordering::SeqCst, Ordering::SeqCst)
            {
                Ok(_) => return Ok(()),
                Err(actual) => current = actual,
            }
        }
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::SeqCst)
    }
}

/// Builds the backend described by `config`. Mocks answer through `frontend`.
pub fn build_backend(
    config: &BackendConfig,
    frontend: NlFrontend,
) -> Result<Arc<dyn LlmBackend>, LlmError> {
    config.validate()?;
    Ok(match config.kind {
        BackendKind::Live => Arc::new(LiveBackend::new(config.clone())?),
        BackendKind::PerfectMock => Arc::new(MockBackend::perfect(frontend, config.request_budget)),
        BackendKind::FaultyMock => Arc::new(MockBackend::faulty(
            frontend,
            config.fault_profile.clone(),
            config.request_budget,
        )),
    })
}
