//! Decision providers: who answers the prompts.
//!
//! [`ScriptedProvider`] replays canned answers keyed by episode, decision
//! ordinal and kind, [`RemoteProvider`] talks to an OpenAI-compatible
//! chat-completions endpoint, and [`RecordingProvider`] wraps either and
//! keeps what it saw as script entries.

mod recording;
mod remote;
mod retry;
mod scripted;

pub use recording::RecordingProvider;
pub use remote::{ProviderConfig, RemoteProvider};
pub use retry::{with_parse_retry, Attempt, ProviderFailure};
pub use scripted::{load_script, ScriptEntry, ScriptError, ScriptedProvider};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompting::{DecisionKind, PromptBundle};

/// Identifies one request within a run. `ordinal` counts every decision of
/// the episode from 0; `attempt` counts corrective re-prompts from 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RequestKey {
    pub episode: String,
    pub ordinal: usize,
    pub kind: DecisionKind,
    #[serde(default)]
    pub attempt: usize,
}

impl fmt::Display for RequestKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "episode {:?}, decision {} ({}), attempt {}",
            self.episode, self.ordinal, self.kind, self.attempt
        )
    }
}

/// An earlier answer that was rejected, and the message explaining why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Correction {
    pub rejected: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy)]
pub struct DecisionRequest<'a> {
    pub key: &'a RequestKey,
    pub prompt: &'a PromptBundle,
    pub corrections: &'a [Correction],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub raw_text: String,
    /// Seconds spent waiting for the answer.
    pub latency: f64,
    /// Wire requests made, including transport retries.
    pub requests: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<TokenUsage>,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProviderError {
    /// Not retryable: the run is misconfigured.
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("request failed after {requests} attempts: {last}")]
    Exhausted { requests: u32, last: String },
    #[error("unusable response: {0}")]
    InvalidResponse(String),
}

pub trait DecisionProvider: Send + Sync {
    fn decide(&self, req: &DecisionRequest<'_>) -> Result<ProviderResponse, ProviderError>;
}

impl<P: DecisionProvider + ?Sized> DecisionProvider for &P {
    fn decide(&self, req: &DecisionRequest<'_>) -> Result<ProviderResponse, ProviderError> {
        (**self).decide(req)
    }
}

impl<P: DecisionProvider + ?Sized> DecisionProvider for Box<P> {
    fn decide(&self, req: &DecisionRequest<'_>) -> Result<ProviderResponse, ProviderError> {
        (**self).decide(req)
    }
}
