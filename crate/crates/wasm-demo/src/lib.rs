//! Browser bindings for three operations: simulate a spoken-style
//! conversation, lay it out as summary windows, and score a summary with ROUGE.
//!
//! Values cross the boundary as JSON strings. The plain functions are the
//! testable core; the `wasm_bindgen` wrappers only translate errors.

use rtsum_core::extractive::extractive_summarize;
use rtsum_core::rouge::{score_pair, token_count, RougeScore};
use rtsum_core::simulate::{simulate_conversation, SimConfig};
use rtsum_core::transcript::span_of;
use rtsum_core::{Conversation, Scope, Session, WindowPolicy};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct WindowView {
    pub scope: Scope,
    pub window_index: Option<u64>,
    pub utterance_ids: Vec<String>,
    pub t_start: f64,
    pub t_end: f64,
    pub span: f64,
    pub tokens: usize,
    pub summary: String,
    pub summary_tokens: usize,
}

#[derive(Debug, Serialize)]
pub struct RougeView {
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    #[serde(rename = "rougeL")]
    pub rouge_l: RougeScore,
}

pub fn simulate(text: &str, p_repeat: f64, p_filler: f64, avg_length: usize, seed: u64) -> Result<Conversation, String> {
    let cfg = SimConfig {
        p_repeat,
        p_filler,
        avg_lengths: vec![avg_length],
        seed,
        ..SimConfig::default()
    };
    simulate_conversation("demo", text, &cfg).map_err(|e| e.to_string())
}

/// Local windows in order, then the global view.
pub fn timeline(conv: &Conversation, n_max: usize, t_max: f64) -> Result<Vec<WindowView>, String> {
    let policy = WindowPolicy::new(n_max, t_max).map_err(|e| e.to_string())?;
    let mut session = Session::new(conv.id.clone(), policy).map_err(|e| e.to_string())?;
    let mut requests = Vec::new();
    for u in &conv.utterances {
        requests.extend(session.ingest(u.clone()).map_err(|e| e.to_string())?);
    }
    requests.extend(session.end().map_err(|e| e.to_string())?);
    Ok(requests
        .into_iter()
        .map(|r| {
            let transcript = r.transcript();
            let summary = extractive_summarize(&transcript);
            let t_start = r.utterances.first().map_or(0.0, |u| u.t_start);
            let span = span_of(&r.utterances).unwrap_or(0.0);
            WindowView {
                scope: r.scope,
                window_index: r.window_index,
                utterance_ids: r.utterance_ids(),
                t_start,
                t_end: t_start + span,
                span,
                tokens: token_count(&transcript),
                summary_tokens: token_count(&summary),
                summary,
            }
        })
        .collect())
}

pub fn rouge(candidate: &str, reference: &str) -> RougeView {
    let [rouge1, rouge2, rouge_l] = score_pair(candidate, reference);
    RougeView { rouge1, rouge2, rouge_l }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("demo views serialize")
}

/// Simulated conversation as JSON (`{"id", "utterances": [...]}`).
#[wasm_bindgen(js_name = simulateConversation)]
pub fn simulate_conversation_js(text: &str, p_repeat: f64, p_filler: f64, avg_length: usize, seed: u32) -> Result<String, JsError> {
    simulate(text, p_repeat, p_filler, avg_length, u64::from(seed))
        .map(|c| to_json(&c))
        .map_err(|e| JsError::new(&e))
}

/// Window layout for a conversation given as JSON.
#[wasm_bindgen(js_name = windowTimeline)]
pub fn window_timeline_js(conversation: &str, n_max: usize, t_max: f64) -> Result<String, JsError> {
    let conv: Conversation = serde_json::from_str(conversation).map_err(|e| JsError::new(&e.to_string()))?;
    timeline(&conv, n_max, t_max)
        .map(|w| to_json(&w))
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = rougeScores)]
pub fn rouge_scores_js(candidate: &str, reference: &str) -> String {
    to_json(&rouge(candidate, reference))
}
