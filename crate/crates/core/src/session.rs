//! Per-conversation windowing state machine.
//!
//! A [`Session`] buffers incoming utterances and closes a local window as
//! soon as it holds `n_max` utterances, or just before an arrival would
//! stretch it past `t_max` seconds. Each closed window yields one local
//! [`SummaryRequest`]; ending the session flushes the residual window and
//! yields one global request over the whole history.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::summarize::SummarizeTask;
use crate::transcript::{join_texts, span_of, Scope, TranscriptError, Utterance, WindowPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlushDecision {
    No,
    /// Close the current window without the incoming utterance, which then
    /// starts the next window.
    FlushBeforeAdd,
    /// Add the incoming utterance, then close the window.
    FlushAfterAdd,
}

/// Decides how `incoming` interacts with a buffer that is at rest
/// (fewer than `n_max` utterances, span within `t_max`).
///
/// An utterance that on its own lasts longer than `t_max` cannot be split,
/// so it is closed into a window by itself.
pub fn should_flush(buffer: &[Utterance], incoming: &Utterance, policy: &WindowPolicy) -> FlushDecision {
    if let Some(first) = buffer.first() {
        let last_end = buffer
            .iter()
            .map(|u| u.t_end)
            .fold(incoming.t_end, f64::max);
        if last_end - first.t_start > policy.t_max {
            return FlushDecision::FlushBeforeAdd;
        }
    }
    if buffer.len() + 1 >= policy.n_max {
        return FlushDecision::FlushAfterAdd;
    }
    if buffer.is_empty() && incoming.duration() > policy.t_max {
        return FlushDecision::FlushAfterAdd;
    }
    FlushDecision::No
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRequest {
    pub session_id: String,
    pub scope: Scope,
    /// Zero-based window ordinal; `None` for the global request.
    pub window_index: Option<u64>,
    pub utterances: Vec<Utterance>,
}

impl SummaryRequest {
    pub fn transcript(&self) -> String {
        join_texts(&self.utterances)
    }

    pub fn utterance_ids(&self) -> Vec<String> {
        self.utterances.iter().map(|u| u.id.clone()).collect()
    }

    pub fn task(&self) -> SummarizeTask {
        SummarizeTask::new(self.scope, self.transcript())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("session {0:?} already exists")]
    SessionExists(String),
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("session {0:?} has already ended")]
    SessionEnded(String),
    #[error("utterance {id:?} starts at {t_start}s, before the previous start {previous}s")]
    OutOfOrder { id: String, t_start: f64, previous: f64 },
    #[error("invalid utterance {id:?}: {reason}")]
    InvalidUtterance { id: String, reason: String },
    #[error(transparent)]
    Policy(#[from] TranscriptError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Open,
    Ended,
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    policy: WindowPolicy,
    buffer: Vec<Utterance>,
    history: Vec<Utterance>,
    seen_ids: HashSet<String>,
    emitted: u64,
    state: SessionState,
}

impl Session {
    pub fn new(id: impl Into<String>, policy: WindowPolicy) -> Result<Self, SessionError> {
        policy.validate()?;
        Ok(Self {
            id: id.into(),
            policy,
            buffer: Vec::new(),
            history: Vec::new(),
            seen_ids: HashSet::new(),
            emitted: 0,
            state: SessionState::Open,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn policy(&self) -> WindowPolicy {
        self.policy
    }

    pub fn buffer(&self) -> &[Utterance] {
        &self.buffer
    }

    pub fn history(&self) -> &[Utterance] {
        &self.history
    }

    /// Number of local windows flushed so far.
    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    fn flush(&mut self) -> SummaryRequest {
        let window_index = self.emitted;
        self.emitted += 1;
        SummaryRequest {
            session_id: self.id.clone(),
            scope: Scope::Local,
            window_index: Some(window_index),
            utterances: std::mem::take(&mut self.buffer),
        }
    }

    pub fn ingest(&mut self, u: Utterance) -> Result<Vec<SummaryRequest>, SessionError> {
        if self.state == SessionState::Ended {
            return Err(SessionError::SessionEnded(self.id.clone()));
        }
        if let Some(finding) = u.check().into_iter().next() {
            return Err(SessionError::InvalidUtterance {
                id: u.id.clone(),
                reason: finding.to_string(),
            });
        }
        if let Some(prev) = self.history.last() {
            if u.t_start < prev.t_start {
                return Err(SessionError::OutOfOrder {
                    id: u.id,
                    t_start: u.t_start,
                    previous: prev.t_start,
                });
            }
        }
        if self.seen_ids.contains(&u.id) {
            return Err(SessionError::InvalidUtterance {
                id: u.id,
                reason: "duplicate utterance id".into(),
            });
        }

        let mut requests = Vec::new();
        let mut decision = should_flush(&self.buffer, &u, &self.policy);
        if decision == FlushDecision::FlushBeforeAdd {
            requests.push(self.flush());
            decision = should_flush(&self.buffer, &u, &self.policy);
        }
        self.seen_ids.insert(u.id.clone());
        self.history.push(u.clone());
        self.buffer.push(u);
        if decision == FlushDecision::FlushAfterAdd {
            requests.push(self.flush());
        }
        Ok(requests)
    }

    /// Closes the conversation: residual local window (if any), then the global request.
    pub fn end(&mut self) -> Result<Vec<SummaryRequest>, SessionError> {
        if self.state == SessionState::Ended {
            return Err(SessionError::SessionEnded(self.id.clone()));
        }
        self.state = SessionState::Ended;
        let mut requests = Vec::new();
        if !self.buffer.is_empty() {
            requests.push(self.flush());
        }
        if !self.history.is_empty() {
            requests.push(SummaryRequest {
                session_id: self.id.clone(),
                scope: Scope::Global,
                window_index: None,
                utterances: self.history.clone(),
            });
        }
        Ok(requests)
    }

    /// Seconds covered by the open window, if any.
    pub fn buffer_span(&self) -> Option<f64> {
        span_of(&self.buffer)
    }
}

/// Many sessions keyed by id.
#[derive(Debug, Default)]
pub struct SessionEngine {
    sessions: HashMap<String, Session>,
}

impl SessionEngine {
    pub fn new() -> Self {
        Self::default()
    }

    /// Opens a session. An id whose previous session has ended may be reused.
    pub fn new_session(&mut self, id: &str, policy: WindowPolicy) -> Result<&mut Session, SessionError> {
        if self
            .sessions
            .get(id)
            .is_some_and(|s| s.state() == SessionState::Open)
        {
            return Err(SessionError::SessionExists(id.to_owned()));
        }
        let session = Session::new(id, policy)?;
        self.sessions.insert(id.to_owned(), session);
        Ok(self.sessions.get_mut(id).expect("just inserted"))
    }

    pub fn get(&self, id: &str) -> Option<&Session> {
        self.sessions.get(id)
    }

    pub fn contains_open(&self, id: &str) -> bool {
        self.sessions
            .get(id)
            .is_some_and(|s| s.state() == SessionState::Open)
    }

    pub fn ingest(&mut self, id: &str, u: Utterance) -> Result<Vec<SummaryRequest>, SessionError> {
        self.sessions
            .get_mut(id)
            .ok_or_else(|| SessionError::UnknownSession(id.to_owned()))?
            .ingest(u)
    }

    pub fn end_session(&mut self, id: &str) -> Result<Vec<SummaryRequest>, SessionError> {
        self.sessions
            .get_mut(id)
            .ok_or_else(|| SessionError::UnknownSession(id.to_owned()))?
            .end()
    }

    pub fn remove(&mut self, id: &str) -> Option<Session> {
        self.sessions.remove(id)
    }

    pub fn open_ids(&self) -> impl Iterator<Item = &str> {
        self.sessions
            .values()
            .filter(|s| s.state() == SessionState::Open)
            .map(|s| s.id())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn utt(id: &str, t0: f64, t1: f64) -> Utterance {
        Utterance::new(id, format!("lời {id}"), t0, t1)
    }

    fn ids(r: &SummaryRequest) -> Vec<&str> {
        r.utterances.iter().map(|u| u.id.as_str()).collect()
    }

    #[test]
    fn new_session_and_duplicates() {
        let mut engine = SessionEngine::new();
        let s = engine.new_session("s1", WindowPolicy::new(4, 30.0).unwrap()).unwrap();
        assert!(s.buffer().is_empty());
        assert_eq!(s.state(), SessionState::Open);
        assert_eq!(
            engine.new_session("s1", WindowPolicy::default()).unwrap_err(),
            SessionError::SessionExists("s1".into())
        );
        assert!(engine.new_session("s2", WindowPolicy::new(1, 30.0).unwrap()).is_ok());
    }

    #[test]
    fn ended_session_id_may_be_reopened() {
        let mut engine = SessionEngine::new();
        engine.new_session("s", WindowPolicy::default()).unwrap();
        engine.end_session("s").unwrap();
        assert!(engine.new_session("s", WindowPolicy::default()).is_ok());
    }

    #[test]
    fn should_flush_count_rule() {
        let policy = WindowPolicy::new(4, 30.0).unwrap();
        let buf = vec![utt("a", 0.0, 2.0), utt("b", 2.0, 4.0), utt("c", 4.0, 6.0)];
        assert_eq!(should_flush(&buf, &utt("d", 6.0, 8.0), &policy), FlushDecision::FlushAfterAdd);
    }

    #[test]
    fn should_flush_time_rule() {
        let policy = WindowPolicy::new(4, 30.0).unwrap();
        let buf = vec![utt("a", 0.0, 28.0)];
        assert_eq!(should_flush(&buf, &utt("b", 29.0, 35.0), &policy), FlushDecision::FlushBeforeAdd);
        // exactly at the cap still fits
        assert_eq!(should_flush(&buf, &utt("b", 29.0, 30.0), &policy), FlushDecision::No);
    }

    #[test]
    fn should_flush_empty_buffer() {
        let p4 = WindowPolicy::new(4, 30.0).unwrap();
        let p1 = WindowPolicy::new(1, 30.0).unwrap();
        assert_eq!(should_flush(&[], &utt("a", 0.0, 5.0), &p4), FlushDecision::No);
        assert_eq!(should_flush(&[], &utt("a", 0.0, 5.0), &p1), FlushDecision::FlushAfterAdd);
        // over-long single utterance closes its own window
        assert_eq!(should_flush(&[], &utt("a", 0.0, 45.0), &p4), FlushDecision::FlushAfterAdd);
    }

    #[test]
    fn nine_short_utterances_flush_after_fourth_and_eighth() {
        let mut s = Session::new("s", WindowPolicy::new(4, 30.0).unwrap()).unwrap();
        let mut flushed_at = Vec::new();
        for i in 0..9 {
            let t = i as f64 * 2.0;
            let reqs = s.ingest(utt(&format!("u{}", i + 1), t, t + 2.0)).unwrap();
            if !reqs.is_empty() {
                assert_eq!(reqs.len(), 1);
                flushed_at.push((i + 1, reqs[0].window_index));
            }
        }
        assert_eq!(flushed_at, vec![(4, Some(0)), (8, Some(1))]);
        assert_eq!(s.buffer().len(), 1);
        assert_eq!(s.buffer()[0].id, "u9");
    }

    #[test]
    fn time_cap_flushes_before_third_arrival() {
        let mut s = Session::new("s", WindowPolicy::new(5, 30.0).unwrap()).unwrap();
        assert!(s.ingest(utt("u1", 0.0, 2.0)).unwrap().is_empty());
        assert!(s.ingest(utt("u2", 14.0, 15.0)).unwrap().is_empty());
        let reqs = s.ingest(utt("u3", 29.0, 31.0)).unwrap();
        assert_eq!(reqs.len(), 1);
        assert_eq!(ids(&reqs[0]), vec!["u1", "u2"]);
        assert_eq!(s.buffer().len(), 1);
        assert_eq!(s.buffer()[0].id, "u3");
    }

    #[test]
    fn ended_session_rejects_ingest_and_end() {
        let mut s = Session::new("s", WindowPolicy::default()).unwrap();
        s.ingest(utt("a", 0.0, 1.0)).unwrap();
        s.end().unwrap();
        assert_eq!(s.ingest(utt("b", 1.0, 2.0)).unwrap_err(), SessionError::SessionEnded("s".into()));
        assert_eq!(s.end().unwrap_err(), SessionError::SessionEnded("s".into()));
    }

    #[test]
    fn out_of_order_and_invalid_utterances_rejected() {
        let mut s = Session::new("s", WindowPolicy::default()).unwrap();
        s.ingest(utt("a", 5.0, 6.0)).unwrap();
        assert!(matches!(s.ingest(utt("b", 3.0, 4.0)), Err(SessionError::OutOfOrder { .. })));
        assert!(matches!(
            s.ingest(utt("a", 7.0, 8.0)),
            Err(SessionError::InvalidUtterance { .. })
        ));
        assert!(matches!(
            s.ingest(Utterance::new("c", "", 7.0, 8.0)),
            Err(SessionError::InvalidUtterance { .. })
        ));
        assert!(matches!(
            s.ingest(utt("d", 9.0, 8.0)),
            Err(SessionError::InvalidUtterance { .. })
        ));
        // rejected utterances leave no trace
        assert_eq!(s.history().len(), 1);
    }

    #[test]
    fn end_with_residual_window() {
        let mut s = Session::new("s", WindowPolicy::new(4, 30.0).unwrap()).unwrap();
        for i in 0..5 {
            let t = i as f64;
            s.ingest(utt(&format!("u{i}"), t, t + 1.0)).unwrap();
        }
        let reqs = s.end().unwrap();
        assert_eq!(reqs.len(), 2);
        assert_eq!(reqs[0].scope, Scope::Local);
        assert_eq!(reqs[0].window_index, Some(1));
        assert_eq!(ids(&reqs[0]), vec!["u4"]);
        assert_eq!(reqs[1].scope, Scope::Global);
        assert_eq!(reqs[1].utterances.len(), 5);
        assert_eq!(s.state(), SessionState::Ended);
    }

    #[test]
    fn end_with_empty_buffer_emits_only_global() {
        let mut s = Session::new("s", WindowPolicy::new(2, 30.0).unwrap()).unwrap();
        s.ingest(utt("a", 0.0, 1.0)).unwrap();
        s.ingest(utt("b", 1.0, 2.0)).unwrap();
        let reqs = s.end().unwrap();
        assert_eq!(reqs.len(), 1);
        assert_eq!(reqs[0].scope, Scope::Global);
    }

    #[test]
    fn ending_empty_session_emits_nothing() {
        let mut s = Session::new("s", WindowPolicy::default()).unwrap();
        assert!(s.end().unwrap().is_empty());
        assert_eq!(s.state(), SessionState::Ended);
    }

    #[test]
    fn engine_unknown_session() {
        let mut engine = SessionEngine::new();
        assert_eq!(
            engine.end_session("nope").unwrap_err(),
            SessionError::UnknownSession("nope".into())
        );
    }
}
