//! Model gateway: the single abstraction every agent role uses for chat
//! and embedding calls.
//!
//! Two providers ship. The mock provider replays scripted fixtures and
//! derives embeddings from seeded character-trigram hashing, so the whole
//! pipeline runs deterministically with no network. The real provider
//! proxies to a remote endpoint configured through `GATEWAY_URL` /
//! `GATEWAY_KEY`. Every request and response is appended to the trace log.

pub mod embed;
pub mod fixtures;
pub mod real;

pub use embed::pseudo_embedding;
pub use fixtures::{Fixture, MockProvider};
pub use real::RealProvider;

use serde::{Deserialize, Serialize};
use skein_core::{TraceLog, Value};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use thiserror::Error;

/// Default dimensionality of mock embeddings.
pub const EMBED_DIM: usize = 256;
/// Default seed for the mock embedding hash.
pub const EMBED_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub text: String,
}

impl Message {
    pub fn system(text: impl Into<String>) -> Self {
        Self { role: Role::System, text: text.into() }
    }

    pub fn user(text: impl Into<String>) -> Self {
        Self { role: Role::User, text: text.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Free-form routing label; the mock provider matches fixtures on it.
    pub tag: String,
}

impl ChatRequest {
    pub fn new(tag: impl Into<String>, messages: Vec<Message>) -> Self {
        Self {
            messages,
            temperature: 0.0,
            max_tokens: 1024,
            tag: tag.into(),
        }
    }

    /// All message text concatenated, used for fixture content matching
    /// and trace digests.
    pub fn full_text(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    /// Per-token log-probabilities, each <= 0, when the provider reports them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_logprobs: Option<Vec<(String, f64)>>,
}

/// A fixed-length embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub values: Vec<f32>,
}

impl Embedding {
    pub fn new(values: Vec<f32>) -> Self {
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|&v| (v as f64) * (v as f64))
            .sum::<f64>()
            .sqrt()
    }
}

/// Cosine similarity in [-1, 1]. Accumulates in f64 regardless of storage
/// precision, so `cosine(a, a)` is 1 up to f64 rounding.
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64, GatewayError> {
    if a.dim() != b.dim() {
        return Err(GatewayError::DimMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (&x, &y) in a.values.iter().zip(&b.values) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(GatewayError::ZeroVector);
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("chat request must contain at least one message")]
    EmptyRequest,
    #[error("text to embed must be non-empty")]
    EmptyText,
    #[error("no fixture matches tag {tag:?} (content {content_digest:?})")]
    NoFixtureMatch { tag: String, content_digest: String },
    #[error("ambiguous fixtures at load time: {0}")]
    AmbiguousFixtures(String),
    #[error("fixture file malformed: {0}")]
    FixtureParse(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("chat call budget exceeded (limit {limit})")]
    BudgetExceeded { limit: u64 },
    #[error("embedding dims differ: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("cosine undefined for a zero vector")]
    ZeroVector,
}

/// A model provider: something that can chat and embed.
pub trait Provider: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;
    fn embed(&self, text: &str) -> Result<Embedding, GatewayError>;
}

/// Provider wrapper adding tracing and an optional per-handle chat budget.
///
/// Handles are cheap to clone; clones share the provider and trace log but
/// each `with_budget` clone gets its own counter, which is how episodes get
/// individual budgets over a shared provider.
#[derive(Clone)]
pub struct Gateway {
    provider: Arc<dyn Provider>,
    trace: Arc<TraceLog>,
    budget: Option<Arc<Budget>>,
    trace_id: String,
}

struct Budget {
    limit: u64,
    used: AtomicU64,
}

impl Gateway {
    pub fn new(provider: Arc<dyn Provider>, trace: Arc<TraceLog>) -> Self {
        Self {
            provider,
            trace,
            budget: None,
            trace_id: "gateway".to_string(),
        }
    }

    /// A clone of this handle with a fresh chat-call budget.
    pub fn with_budget(&self, limit: u64) -> Self {
        let mut next = self.clone();
        next.budget = Some(Arc::new(Budget {
            limit,
            used: AtomicU64::new(0),
        }));
        next
    }

    /// A clone of this handle that stamps trace events with `trace_id`.
    pub fn for_trace(&self, trace_id: &str) -> Self {
        let mut next = self.clone();
        next.trace_id = trace_id.to_string();
        next
    }

    pub fn trace(&self) -> &Arc<TraceLog> {
        &self.trace
    }

    pub fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        if request.messages.is_empty() {
            return Err(GatewayError::EmptyRequest);
        }
        if let Some(budget) = &self.budget {
            let used = budget.used.fetch_add(1, Ordering::SeqCst);
            if used >= budget.limit {
                return Err(GatewayError::BudgetExceeded { limit: budget.limit });
            }
        }
        self.trace.emit(
            &self.trace_id,
            "chat.request",
            serde_json::json!({
                "tag": request.tag,
                "messages": request.messages.len(),
                "text": request.full_text(),
            }),
        );
        let result = self.provider.chat(request);
        match &result {
            Ok(response) => {
                self.trace.emit(
                    &self.trace_id,
                    "chat.response",
                    serde_json::json!({ "tag": request.tag, "text": response.text }),
                );
            }
            Err(err) => {
                self.trace.emit(
                    &self.trace_id,
                    "chat.error",
                    serde_json::json!({ "tag": request.tag, "error": err.to_string() }),
                );
            }
        }
        result
    }

    pub fn embed(&self, text: &str) -> Result<Embedding, GatewayError> {
        if text.trim().is_empty() {
            return Err(GatewayError::EmptyText);
        }
        self.provider.embed(text)
    }

    pub fn cosine_of(&self, a: &str, b: &str) -> Result<f64, GatewayError> {
        cosine(&self.embed(a)?, &self.embed(b)?)
    }

    /// Convenience used all over the tests: a single-user-message call.
    pub fn ask(&self, tag: &str, text: impl Into<String>) -> Result<ChatResponse, GatewayError> {
        self.chat(&ChatRequest::new(tag, vec![Message::user(text)]))
    }
}

/// Short digest of request content for error messages.
pub(crate) fn content_digest(text: &str) -> String {
    let trimmed: String = text.chars().take(60).collect();
    if trimmed.len() < text.len() {
        format!("{trimmed}…")
    } else {
        trimmed
    }
}

pub fn value_digest(value: &Value) -> String {
    content_digest(&value.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::approx_constant)] // 0.7071 is the documented contract value
    fn cosine_identity_and_symmetry() {
        let a = Embedding::new(vec![1.0, 1.0]);
        let b = Embedding::new(vec![1.0, 0.0]);
        assert!((cosine(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&a, &b).unwrap(), cosine(&b, &a).unwrap());
        // (1,1)/sqrt(2) against (1,0).
        assert!((cosine(&a, &b).unwrap() - 0.7071).abs() < 1e-4);
    }

    #[test]
    fn cosine_orthogonal_is_zero() {
        let a = Embedding::new(vec![1.0, 0.0]);
        let b = Embedding::new(vec![0.0, 1.0]);
        assert_eq!(cosine(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn cosine_rejects_dim_mismatch_and_zero() {
        let a = Embedding::new(vec![1.0, 0.0]);
        let b = Embedding::new(vec![1.0]);
        assert!(matches!(
            cosine(&a, &b),
            Err(GatewayError::DimMismatch { .. })
        ));
        let z = Embedding::new(vec![0.0, 0.0]);
        assert!(matches!(cosine(&a, &z), Err(GatewayError::ZeroVector)));
    }
}
