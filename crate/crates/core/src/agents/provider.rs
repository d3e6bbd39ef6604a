use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{CommunicationCategory, ContractViolation, StressBand};

/// Which generative role issued a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Classifier,
    Partner,
    Interpreter,
    Coach,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChatRole {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::Assistant,
            content: content.into(),
        }
    }
}

/// Structured side-channel describing a request. Never sent over the wire;
/// the mock provider keys its template tables on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestTags {
    pub agent: AgentRole,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stress_band: Option<StressBand>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<CommunicationCategory>,
}

impl RequestTags {
    pub fn new(agent: AgentRole) -> Self {
        Self {
            agent,
            stress_band: None,
            categories: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f32,
    pub max_tokens: u32,
    pub tags: RequestTags,
}

impl ProviderRequest {
    pub fn new(
        messages: Vec<ChatMessage>,
        temperature: f32,
        max_tokens: u32,
        tags: RequestTags,
    ) -> Result<Self, ContractViolation> {
        if messages.is_empty() {
            return Err(ContractViolation::new("provider request needs at least one message"));
        }
        if !(0.0..=2.0).contains(&temperature) {
            return Err(ContractViolation::new(format!(
                "temperature {temperature} outside [0, 2]"
            )));
        }
        if max_tokens == 0 {
            return Err(ContractViolation::new("max_tokens must be positive"));
        }
        Ok(Self {
            messages,
            temperature,
            max_tokens,
            tags,
        })
    }

    /// Content of the last user-role message, if any.
    pub fn last_user_content(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == ChatRole::User)
            .map(|m| m.content.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Stop,
    Length,
    ContentFilter,
    Other,
}

impl FinishReason {
    pub fn from_wire(s: Option<&str>) -> Self {
        match s {
            Some("stop") | None => FinishReason::Stop,
            Some("length") => FinishReason::Length,
            Some("content_filter") => FinishReason::ContentFilter,
            Some(_) => FinishReason::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub content: String,
    pub finish_reason: FinishReason,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ProviderError {
    #[error("authentication failed: {0}")]
    Auth(String),
    /// Timeouts and connection failures, after exhausting retries.
    #[error("provider timed out after {attempts} attempt(s): {detail}")]
    Timeout { attempts: u32, detail: String },
    #[error("provider returned HTTP {status} after {attempts} attempt(s)")]
    Transient { status: u16, attempts: u32 },
    #[error("provider returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("provider misconfigured: {0}")]
    Config(String),
    #[error("provider failure: {0}")]
    Other(String),
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            ProviderError::Timeout { .. } | ProviderError::Transient { .. }
        )
    }
}

/// A chat-completion backend shared by all agents.
#[async_trait]
pub trait ChatProvider: Send + Sync {
    async fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError>;

    fn name(&self) -> &str;
}
