#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use rtsum_core::summarize::{BackendError, SummarizeTask};
use rtsum_core::wire::{encode_event, parse_event, WireEvent};
use rtsum_core::{Utterance, WindowPolicy};
use rtsum_service::backend::Summarizer;
use rtsum_service::serve::{run_serve, ServeConfig};
use tokio::io::AsyncReadExt;

pub fn config(n_max: usize, t_max: f64) -> ServeConfig {
    ServeConfig {
        policy: WindowPolicy { n_max, t_max },
        ..ServeConfig::default()
    }
}

pub fn utterance(session: &str, id: &str, text: &str, t_start: f64, t_end: f64) -> String {
    encode_event(&WireEvent::Utterance {
        session: session.into(),
        utterance: Utterance::new(id, text, t_start, t_end),
    })
}

pub fn end(session: &str) -> String {
    encode_event(&WireEvent::EndOfConversation { session: session.into() })
}

/// Feeds `lines` to a stdio-style service and collects every event it writes.
pub async fn serve_lines(config: ServeConfig, backend: Arc<dyn Summarizer>, lines: &[String]) -> Vec<WireEvent> {
    let mut input = lines.join("\n");
    input.push('\n');
    let (writer, mut reader) = tokio::io::duplex(1 << 16);
    let collect = tokio::spawn(async move {
        let mut out = String::new();
        reader.read_to_string(&mut out).await.unwrap();
        out
    });
    run_serve(config, backend, input.as_bytes(), writer).await.unwrap();
    let out = collect.await.unwrap();
    out.lines().map(|l| parse_event(l).unwrap()).collect()
}

pub fn for_session<'a>(events: &'a [WireEvent], session: &str) -> Vec<&'a WireEvent> {
    events.iter().filter(|e| e.session() == session).collect()
}

/// Echoes the transcript's first word, optionally hanging on one session.
pub struct ScriptedBackend {
    pub calls: AtomicUsize,
    pub hang_on: Option<String>,
    pub delay: Duration,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self {
            calls: AtomicUsize::new(0),
            hang_on: None,
            delay: Duration::ZERO,
        }
    }
}

#[async_trait]
impl Summarizer for ScriptedBackend {
    async fn summarize(&self, task: &SummarizeTask) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(marker) = &self.hang_on {
            if task.transcript.contains(marker.as_str()) {
                std::future::pending::<()>().await;
            }
        }
        if !self.delay.is_zero() {
            tokio::time::sleep(self.delay).await;
        }
        Ok(task.transcript.split_whitespace().next().unwrap_or("-").to_owned())
    }
}
