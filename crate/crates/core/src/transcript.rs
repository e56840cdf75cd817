//! Domain types for streamed transcripts and the summaries produced over them.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rouge::tokenize;

/// One timestamped fragment of a speaker turn, as emitted by an ASR system.
///
/// Times are seconds relative to the start of the conversation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<String>,
    pub text: String,
    pub t_start: f64,
    pub t_end: f64,
}

impl Utterance {
    pub fn new(id: impl Into<String>, text: impl Into<String>, t_start: f64, t_end: f64) -> Self {
        Self {
            id: id.into(),
            speaker: None,
            text: text.into(),
            t_start,
            t_end,
        }
    }

    pub fn with_speaker(mut self, speaker: impl Into<String>) -> Self {
        self.speaker = Some(speaker.into());
        self
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// Findings that concern this utterance alone (times and text).
    pub fn check(&self) -> Vec<Finding> {
        let mut findings = Vec::new();
        let times_ok = self.t_start.is_finite()
            && self.t_end.is_finite()
            && self.t_start >= 0.0
            && self.t_end >= self.t_start;
        if !times_ok {
            findings.push(Finding::InvalidTimes {
                id: self.id.clone(),
                t_start: self.t_start,
                t_end: self.t_end,
            });
        }
        if tokenize(&self.text).is_empty() {
            findings.push(Finding::EmptyText { id: self.id.clone() });
        }
        findings
    }
}

/// Seconds from the earliest start to the latest end in `utterances`.
///
/// Utterances may overlap, so the latest end is not necessarily the end of the
/// last element. Returns `None` for an empty slice.
pub fn span_of(utterances: &[Utterance]) -> Option<f64> {
    let first = utterances.first()?;
    let last_end = utterances
        .iter()
        .map(|u| u.t_end)
        .fold(f64::NEG_INFINITY, f64::max);
    Some(last_end - first.t_start)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conversation {
    pub id: String,
    pub utterances: Vec<Utterance>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TranscriptError {
    #[error("conversation has no utterances")]
    EmptyConversation,
    #[error("invalid window policy: {0}")]
    InvalidPolicy(String),
}

impl Conversation {
    pub fn new(id: impl Into<String>, utterances: Vec<Utterance>) -> Self {
        Self {
            id: id.into(),
            utterances,
        }
    }

    /// Wall-clock length of the conversation in seconds.
    pub fn span(&self) -> Result<f64, TranscriptError> {
        span_of(&self.utterances).ok_or(TranscriptError::EmptyConversation)
    }

    /// Lists every violated invariant; an empty report means the conversation is valid.
    pub fn validate(&self) -> ValidationReport {
        let mut findings = Vec::new();
        let mut seen = HashSet::new();
        let mut prev_start: Option<f64> = None;
        for (index, u) in self.utterances.iter().enumerate() {
            if !seen.insert(u.id.as_str()) {
                findings.push(Finding::DuplicateId { id: u.id.clone() });
            }
            if let Some(prev) = prev_start {
                if u.t_start < prev {
                    findings.push(Finding::NonMonotonicTime {
                        index,
                        id: u.id.clone(),
                        previous: prev,
                        t_start: u.t_start,
                    });
                }
            }
            prev_start = Some(u.t_start);
            findings.extend(u.check());
        }
        ValidationReport { findings }
    }

    pub fn transcript(&self) -> String {
        join_texts(&self.utterances)
    }
}

/// Space-joined utterance texts, in order.
pub fn join_texts(utterances: &[Utterance]) -> String {
    let mut out = String::new();
    for u in utterances {
        let text = u.text.trim();
        if text.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(text);
    }
    out
}

/// A single violated conversation invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    DuplicateId { id: String },
    NonMonotonicTime { index: usize, id: String, previous: f64, t_start: f64 },
    EmptyText { id: String },
    InvalidTimes { id: String, t_start: f64, t_end: f64 },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::DuplicateId { id } => write!(f, "duplicate utterance id {id:?}"),
            Finding::NonMonotonicTime {
                index,
                id,
                previous,
                t_start,
            } => write!(
                f,
                "utterance #{index} ({id:?}) starts at {t_start}s, before previous start {previous}s"
            ),
            Finding::EmptyText { id } => write!(f, "utterance {id:?} has no tokens"),
            Finding::InvalidTimes { id, t_start, t_end } => {
                write!(f, "utterance {id:?} has invalid times [{t_start}, {t_end}]")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Flush rule for local windows: at most `n_max` utterances spanning at most
/// `t_max` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowPolicy {
    pub n_max: usize,
    pub t_max: f64,
}

impl WindowPolicy {
    pub const DEFAULT_N_MAX: usize = 4;
    pub const DEFAULT_T_MAX: f64 = 30.0;

    pub fn new(n_max: usize, t_max: f64) -> Result<Self, TranscriptError> {
        let policy = Self { n_max, t_max };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<(), TranscriptError> {
        if self.n_max == 0 {
            return Err(TranscriptError::InvalidPolicy("n_max must be at least 1".into()));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(TranscriptError::InvalidPolicy(format!(
                "t_max must be a positive number of seconds, got {}",
                self.t_max
            )));
        }
        Ok(())
    }
}

impl Default for WindowPolicy {
    fn default() -> Self {
        Self {
            n_max: Self::DEFAULT_N_MAX,
            t_max: Self::DEFAULT_T_MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Local,
    Global,
}

impl Scope {
    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Local => "local",
            Scope::Global => "global",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "local" => Ok(Scope::Local),
            "global" => Ok(Scope::Global),
            other => Err(format!("unknown scope {other:?}")),
        }
    }
}

/// A produced summary. Local units carry the index of the window they cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryUnit {
    pub scope: Scope,
    pub window_index: Option<u64>,
    pub utterance_ids: Vec<String>,
    pub text: String,
}
