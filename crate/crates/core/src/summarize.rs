//! Backend-neutral summarization task and configuration types.
//!
//! The extractive backend lives in [`crate::extractive`]; the remote
//! chat-completion client is provided by the service crate, which consumes the
//! same [`BackendConfig`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::transcript::Scope;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarizeTask {
    pub scope: Scope,
    pub transcript: String,
    #[serde(default = "default_language")]
    pub language: String,
}

fn default_language() -> String {
    "vi".to_owned()
}

impl SummarizeTask {
    pub fn new(scope: Scope, transcript: impl Into<String>) -> Self {
        Self {
            scope,
            transcript: transcript.into(),
            language: default_language(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Extractive,
    Remote,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "extractive" => Ok(Self::Extractive),
            "remote" => Ok(Self::Remote),
            other => Err(format!("unknown backend {other:?} (expected extractive or remote)")),
        }
    }
}

/// One in-context (transcript, summary) demonstration for the remote prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExamplePair {
    pub transcript: String,
    pub summary: String,
}

impl ExamplePair {
    pub fn new(transcript: impl Into<String>, summary: impl Into<String>) -> Self {
        Self {
            transcript: transcript.into(),
            summary: summary.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    /// Per-attempt timeout, seconds.
    pub timeout: f64,
    pub max_retries: u32,
    /// Base delay before the first retry, seconds; doubles on each retry.
    pub backoff: f64,
    /// Upper bound on concurrent remote requests.
    pub max_in_flight: usize,
    pub instruction: Option<String>,
    pub example_pairs: Vec<ExamplePair>,
    pub required_examples: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Extractive,
            endpoint: None,
            model: "gpt-3.5-turbo".to_owned(),
            temperature: 0.7,
            top_p: 0.9,
            timeout: 30.0,
            max_retries: 2,
            backoff: 0.5,
            max_in_flight: 8,
            instruction: None,
            example_pairs: Vec::new(),
            required_examples: 2,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        let bad = |msg: String| Err(BackendError::InvalidConfig(msg));
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad(format!("top_p must be in (0, 1], got {}", self.top_p));
        }
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            return bad(format!("timeout must be positive, got {}", self.timeout));
        }
        if !(self.backoff >= 0.0 && self.backoff.is_finite()) {
            return bad(format!("backoff must be >= 0, got {}", self.backoff));
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1".into());
        }
        if self.kind == BackendKind::Remote && self.endpoint.is_none() {
            return bad("remote backend requires an endpoint".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend unavailable after {attempts} attempt(s): {last_error}")]
    Unavailable { attempts: u32, last_error: String },
    #[error("backend returned an empty summary")]
    EmptyResponse,
    #[error("backend rejected the request: {0}")]
    Rejected(String),
    #[error("invalid backend configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid in-context example: {0}")]
    InvalidExample(String),
    #[error("summarization task has an empty transcript")]
    EmptyTranscript,
}
