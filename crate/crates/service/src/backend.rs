//! Summarization backends: the in-process extractive baseline and a remote
//! chat-completion client with per-attempt timeouts and bounded retries.

use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use rtsum_core::extractive::summarize_extractive;
use rtsum_core::prompt::build_prompt;
use rtsum_core::summarize::{BackendConfig, BackendError, BackendKind, SummarizeTask};
use serde_json::{json, Value};
use tokio::sync::Semaphore;
use tracing::{debug, warn};

/// Environment variable holding the bearer token for the remote backend.
pub const API_KEY_ENV: &str = "RTSUM_API_KEY";

const MAX_BACKOFF: Duration = Duration::from_secs(30);

#[async_trait]
pub trait Summarizer: Send + Sync {
    async fn summarize(&self, task: &SummarizeTask) -> Result<String, BackendError>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ExtractiveBackend;

#[async_trait]
impl Summarizer for ExtractiveBackend {
    async fn summarize(&self, task: &SummarizeTask) -> Result<String, BackendError> {
        summarize_extractive(task)
    }
}

/// Delay before retry number `retry` (1-based): `base · 2^(retry-1)`, capped at 30 s.
pub fn backoff_delay(base: Duration, retry: u32) -> Duration {
    let factor = 2u32.saturating_pow(retry.saturating_sub(1));
    base.saturating_mul(factor).min(MAX_BACKOFF)
}

pub struct RemoteBackend {
    client: reqwest::Client,
    endpoint: String,
    cfg: BackendConfig,
    api_key: Option<String>,
    in_flight: Semaphore,
}

enum AttemptError {
    Retryable(String),
    Fatal(BackendError),
}

impl RemoteBackend {
    pub fn new(cfg: BackendConfig) -> Result<Self, BackendError> {
        Self::with_api_key(cfg, std::env::var(API_KEY_ENV).ok())
    }

    pub fn with_api_key(cfg: BackendConfig, api_key: Option<String>) -> Result<Self, BackendError> {
        cfg.validate()?;
        let endpoint = cfg
            .endpoint
            .clone()
            .ok_or_else(|| BackendError::InvalidConfig("remote backend requires an endpoint".into()))?;
        if cfg.example_pairs.len() != cfg.required_examples {
            return Err(BackendError::InvalidExample(format!(
                "{} example pair(s) configured but {} required",
                cfg.example_pairs.len(),
                cfg.required_examples
            )));
        }
        let client = reqwest::Client::builder()
            .build()
            .map_err(|e| BackendError::InvalidConfig(e.to_string()))?;
        Ok(Self {
            client,
            endpoint,
            in_flight: Semaphore::new(cfg.max_in_flight),
            cfg,
            api_key,
        })
    }

    pub fn request_body(&self, task: &SummarizeTask) -> Result<Value, BackendError> {
        let prompt = build_prompt(
            task,
            &self.cfg.example_pairs,
            self.cfg.instruction.as_deref(),
            self.cfg.required_examples,
        )?;
        Ok(json!({
            "model": self.cfg.model,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
            "temperature": self.cfg.temperature,
            "top_p": self.cfg.top_p,
        }))
    }

    async fn attempt(&self, body: &Value) -> Result<String, AttemptError> {
        let mut request = self.client.post(&self.endpoint).json(body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let timeout = Duration::from_secs_f64(self.cfg.timeout);
        let response = match tokio::time::timeout(timeout, request.send()).await {
            Err(_) => return Err(AttemptError::Retryable(format!("timed out after {timeout:?}"))),
            Ok(Err(e)) => return Err(AttemptError::Retryable(e.to_string())),
            Ok(Ok(r)) => r,
        };
        let status = response.status();
        if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Err(AttemptError::Retryable(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let text = response.text().await.unwrap_or_default();
            return Err(AttemptError::Fatal(BackendError::Rejected(format!("HTTP {status}: {text}"))));
        }
        let payload: Value = match tokio::time::timeout(timeout, response.json()).await {
            Err(_) => return Err(AttemptError::Retryable("timed out reading response".into())),
            Ok(Err(e)) => return Err(AttemptError::Retryable(e.to_string())),
            Ok(Ok(v)) => v,
        };
        let text = extract_text(&payload).unwrap_or_default().trim().to_owned();
        if text.is_empty() {
            return Err(AttemptError::Fatal(BackendError::EmptyResponse));
        }
        Ok(text)
    }
}

/// Pulls the summary out of a chat-completion, completion, or plain `{"text": ..}` reply.
fn extract_text(payload: &Value) -> Option<&str> {
    let choice = payload.get("choices").and_then(|c| c.get(0));
    choice
        .and_then(|c| c.pointer("/message/content"))
        .or_else(|| choice.and_then(|c| c.get("text")))
        .or_else(|| payload.get("text"))
        .and_then(Value::as_str)
}

#[async_trait]
impl Summarizer for RemoteBackend {
    async fn summarize(&self, task: &SummarizeTask) -> Result<String, BackendError> {
        let body = self.request_body(task)?;
        let _permit = self.in_flight.acquire().await.expect("semaphore never closed");
        let base = Duration::from_secs_f64(self.cfg.backoff);
        let attempts = self.cfg.max_retries + 1;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                tokio::time::sleep(backoff_delay(base, attempt)).await;
            }
            match self.attempt(&body).await {
                Ok(text) => return Ok(text),
                Err(AttemptError::Fatal(e)) => return Err(e),
                Err(AttemptError::Retryable(e)) => {
                    warn!(attempt = attempt + 1, error = %e, "remote summarize attempt failed");
                    last_error = e;
                }
            }
        }
        debug!(attempts, "remote backend exhausted retries");
        Err(BackendError::Unavailable {
            attempts,
            last_error,
        })
    }
}

pub fn build_backend(cfg: &BackendConfig) -> Result<Arc<dyn Summarizer>, BackendError> {
    cfg.validate()?;
    Ok(match cfg.kind {
        BackendKind::Extractive => Arc::new(ExtractiveBackend),
        BackendKind::Remote => Arc::new(RemoteBackend::new(cfg.clone())?),
    })
}

/// One-shot dispatch on `cfg.kind`.
pub async fn summarize(task: &SummarizeTask, cfg: &BackendConfig) -> Result<String, BackendError> {
    build_backend(cfg)?.summarize(task).await
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_is_monotonic_and_capped() {
        let base = Duration::from_millis(100);
        let delays: Vec<_> = (1..=12).map(|r| backoff_delay(base, r)).collect();
        assert_eq!(delays[0], Duration::from_millis(100));
        assert_eq!(delays[1], Duration::from_millis(200));
        assert!(delays.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*delays.last().unwrap(), MAX_BACKOFF);
        assert_eq!(backoff_delay(base, 200), MAX_BACKOFF);
    }

    #[test]
    fn extracts_text_from_known_reply_shapes() {
        let chat = json!({"choices": [{"message": {"role": "assistant", "content": "a"}}]});
        let completion = json!({"choices": [{"text": "b"}]});
        let plain = json!({"text": "c"});
        assert_eq!(extract_text(&chat), Some("a"));
        assert_eq!(extract_text(&completion), Some("b"));
        assert_eq!(extract_text(&plain), Some("c"));
        assert_eq!(extract_text(&json!({})), None);
    }

    #[test]
    fn remote_requires_endpoint_and_examples() {
        let cfg = BackendConfig {
            kind: BackendKind::Remote,
            ..BackendConfig::default()
        };
        assert!(matches!(RemoteBackend::with_api_key(cfg.clone(), None), Err(BackendError::InvalidConfig(_))));
        let cfg = BackendConfig {
            endpoint: Some("http://127.0.0.1:1/v1/chat/completions".into()),
            ..cfg
        };
        assert!(matches!(RemoteBackend::with_api_key(cfg, None), Err(BackendError::InvalidExample(_))));
    }

    #[tokio::test]
    async fn extractive_dispatch_matches_direct_call() {
        let task = SummarizeTask::new(rtsum_core::Scope::Local, "một hai ba bốn năm sáu bảy tám chín mười");
        let via_dispatch = summarize(&task, &BackendConfig::default()).await.unwrap();
        assert_eq!(via_dispatch, rtsum_core::extractive::extractive_summarize(&task.transcript));
    }
}
