//! Newline-delimited JSON events exchanged with the streaming service.
//!
//! Inbound: `utterance`, `end_of_conversation`.
//! Outbound: `local_summary`, `global_summary`, `error`.
//!
//! ```text
//! {"type":"utterance","session":"s1","id":"u1","speaker":"A","text":"...","t_start":0.0,"t_end":2.1}
//! {"type":"end_of_conversation","session":"s1"}
//! {"type":"local_summary","session":"s1","window_index":0,"utterance_ids":["u1"],"text":"..."}
//! {"type":"global_summary","session":"s1","utterance_ids":["u1"],"text":"..."}
//! {"type":"error","session":"s1","window_index":0,"message":"..."}
//! ```

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::transcript::Utterance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WireEvent {
    Utterance {
        session: String,
        #[serde(flatten)]
        utterance: Utterance,
    },
    EndOfConversation {
        session: String,
    },
    LocalSummary {
        session: String,
        window_index: u64,
        utterance_ids: Vec<String>,
        text: String,
    },
    GlobalSummary {
        session: String,
        utterance_ids: Vec<String>,
        text: String,
    },
    Error {
        session: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window_index: Option<u64>,
        message: String,
    },
}

impl WireEvent {
    pub fn session(&self) -> &str {
        match self {
            WireEvent::Utterance { session, .. }
            | WireEvent::EndOfConversation { session }
            | WireEvent::LocalSummary { session, .. }
            | WireEvent::GlobalSummary { session, .. }
            | WireEvent::Error { session, .. } => session,
        }
    }

    pub fn is_inbound(&self) -> bool {
        matches!(self, WireEvent::Utterance { .. } | WireEvent::EndOfConversation { .. })
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            WireEvent::Utterance { .. } => "utterance",
            WireEvent::EndOfConversation { .. } => "end_of_conversation",
            WireEvent::LocalSummary { .. } => "local_summary",
            WireEvent::GlobalSummary { .. } => "global_summary",
            WireEvent::Error { .. } => "error",
        }
    }

    pub fn error(session: impl Into<String>, window_index: Option<u64>, message: impl Into<String>) -> Self {
        WireEvent::Error {
            session: session.into(),
            window_index,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("malformed event: {0}")]
    Malformed(String),
    #[error("unknown event type {0:?}")]
    UnknownType(String),
    #[error("missing required field {0:?}")]
    MissingField(String),
    #[error("invalid field {field:?}: {message}")]
    InvalidField { field: String, message: String },
    #[error("{0} events are inbound and cannot be emitted")]
    ContractViolation(String),
}

impl WireError {
    /// Name of the offending field, when one can be identified.
    pub fn field(&self) -> Option<&str> {
        match self {
            WireError::MissingField(f) | WireError::InvalidField { field: f, .. } => Some(f),
            WireError::UnknownType(_) => Some("type"),
            _ => None,
        }
    }
}

fn required_fields(kind: &str) -> Option<&'static [&'static str]> {
    Some(match kind {
        "utterance" => &["session", "id", "text", "t_start", "t_end"],
        "end_of_conversation" => &["session"],
        "local_summary" => &["session", "window_index", "utterance_ids", "text"],
        "global_summary" => &["session", "utterance_ids", "text"],
        "error" => &["session", "message"],
        _ => return None,
    })
}

/// Expected JSON shape of each known field, for precise error reporting.
fn check_field(name: &str, value: &Value) -> Result<(), WireError> {
    let ok = match name {
        "session" | "id" | "text" | "message" | "type" => value.is_string(),
        "speaker" => value.is_string() || value.is_null(),
        "t_start" | "t_end" => value.is_number(),
        "window_index" => value.is_u64() || value.is_null(),
        "utterance_ids" => value
            .as_array()
            .is_some_and(|a| a.iter().all(Value::is_string)),
        _ => true,
    };
    if ok {
        Ok(())
    } else {
        Err(WireError::InvalidField {
            field: name.to_owned(),
            message: format!("unexpected value {value}"),
        })
    }
}

/// Strictly parses one event line.
pub fn parse_event(line: &str) -> Result<WireEvent, WireError> {
    let value: Value = serde_json::from_str(line.trim()).map_err(|e| WireError::Malformed(e.to_string()))?;
    let obj: &Map<String, Value> = value
        .as_object()
        .ok_or_else(|| WireError::Malformed("event must be a JSON object".into()))?;
    let kind = match obj.get("type") {
        None => return Err(WireError::MissingField("type".into())),
        Some(Value::String(s)) => s.as_str(),
        Some(other) => {
            return Err(WireError::InvalidField {
                field: "type".into(),
                message: format!("expected a string, got {other}"),
            })
        }
    };
    let required = required_fields(kind).ok_or_else(|| WireError::UnknownType(kind.to_owned()))?;
    for field in required {
        if !obj.contains_key(*field) {
            return Err(WireError::MissingField((*field).to_owned()));
        }
    }
    for (name, v) in obj {
        check_field(name, v)?;
    }
    serde_json::from_value(value.clone()).map_err(|e| WireError::Malformed(e.to_string()))
}

/// Serializes an outbound event as a single line (no trailing newline).
pub fn emit_event(event: &WireEvent) -> Result<String, WireError> {
    if event.is_inbound() {
        return Err(WireError::ContractViolation(event.type_name().to_owned()));
    }
    Ok(serde_json::to_string(event).expect("wire events serialize"))
}

/// Serializes any event, including inbound ones; used by clients and replay tools.
pub fn encode_event(event: &WireEvent) -> String {
    serde_json::to_string(event).expect("wire events serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_utterance() {
        let line = r#"{"type":"utterance","session":"s1","id":"u1","speaker":"A","text":"xin chào","t_start":0.5,"t_end":2}"#;
        let event = parse_event(line).unwrap();
        assert_eq!(
            event,
            WireEvent::Utterance {
                session: "s1".into(),
                utterance: Utterance::new("u1", "xin chào", 0.5, 2.0).with_speaker("A"),
            }
        );
    }

    #[test]
    fn speaker_is_optional() {
        let line = r#"{"type":"utterance","session":"s","id":"u","text":"x","t_start":0,"t_end":1}"#;
        assert!(matches!(parse_event(line), Ok(WireEvent::Utterance { .. })));
    }

    #[test]
    fn unknown_type_rejected() {
        assert_eq!(
            parse_event(r#"{"type":"dance"}"#),
            Err(WireError::UnknownType("dance".into()))
        );
    }

    #[test]
    fn missing_t_start_rejected() {
        let err = parse_event(r#"{"type":"utterance","session":"s","id":"u","text":"x","t_end":1}"#).unwrap_err();
        assert_eq!(err, WireError::MissingField("t_start".into()));
        assert_eq!(err.field(), Some("t_start"));
    }

    #[test]
    fn wrong_field_type_rejected() {
        let err = parse_event(r#"{"type":"utterance","session":"s","id":"u","text":"x","t_start":"0","t_end":1}"#)
            .unwrap_err();
        assert_eq!(err.field(), Some("t_start"));
    }

    #[test]
    fn garbage_is_malformed() {
        assert!(matches!(parse_event("not json"), Err(WireError::Malformed(_))));
        assert!(matches!(parse_event("[1,2]"), Err(WireError::Malformed(_))));
        assert_eq!(parse_event("{}"), Err(WireError::MissingField("type".into())));
    }

    #[test]
    fn emit_local_and_global() {
        let local = WireEvent::LocalSummary {
            session: "s".into(),
            window_index: 3,
            utterance_ids: vec!["a".into(), "b".into()],
            text: "tóm tắt".into(),
        };
        let line = emit_event(&local).unwrap();
        assert!(!line.contains('\n'));
        assert_eq!(parse_event(&line).unwrap(), local);

        let global = WireEvent::GlobalSummary {
            session: "s".into(),
            utterance_ids: (0..10).map(|i| format!("u{i}")).collect(),
            text: "toàn bộ".into(),
        };
        let line = emit_event(&global).unwrap();
        assert!(line.contains("\"u9\""));
        assert_eq!(parse_event(&line).unwrap(), global);
    }

    #[test]
    fn emitting_inbound_is_contract_violation() {
        let e = WireEvent::EndOfConversation { session: "s".into() };
        assert_eq!(emit_event(&e), Err(WireError::ContractViolation("end_of_conversation".into())));
        let u = WireEvent::Utterance {
            session: "s".into(),
            utterance: Utterance::new("u", "x", 0.0, 1.0),
        };
        assert!(matches!(emit_event(&u), Err(WireError::ContractViolation(_))));
    }

    proptest! {
        #[test]
        fn inbound_encode_parse_round_trip(
            session in ".{0,12}", id in ".{1,8}", text in ".{1,30}",
            t0 in 0.0f64..1e4, d in 0.0f64..60.0, speaker in proptest::option::of(".{0,5}")
        ) {
            let mut utterance = Utterance::new(id, text, t0, t0 + d);
            utterance.speaker = speaker;
            let e = WireEvent::Utterance { session, utterance };
            prop_assert_eq!(parse_event(&encode_event(&e)).unwrap(), e);
        }
    }
}
