//! Trace event stream: every model call, tool invocation, vertex
//! transition, and cache decision is appended here with a monotonic
//! sequence number, giving each episode a fully auditable history.

use crate::Value;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    /// Monotonic per-process sequence number.
    pub seq: u64,
    /// Milliseconds since the Unix epoch.
    pub ts_ms: u64,
    /// Episode (or admin operation) this event belongs to.
    pub trace_id: String,
    /// Event kind, e.g. "vertex.start", "tool.call", "chat.response".
    pub kind: String,
    #[serde(default)]
    pub data: Value,
}

/// Shared in-memory trace log. Appends are serialized; reads snapshot.
#[derive(Debug, Default)]
pub struct TraceLog {
    seq: AtomicU64,
    events: Mutex<Vec<TraceEvent>>,
}

pub fn epoch_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl TraceLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends an event and returns its sequence number.
    pub fn emit(&self, trace_id: &str, kind: &str, data: Value) -> u64 {
        let seq = self.seq.fetch_add(1, Ordering::SeqCst);
        let event = TraceEvent {
            seq,
            ts_ms: epoch_ms(),
            trace_id: trace_id.to_string(),
            kind: kind.to_string(),
            data,
        };
        self.events.lock().expect("trace lock").push(event);
        seq
    }

    pub fn snapshot(&self) -> Vec<TraceEvent> {
        self.events.lock().expect("trace lock").clone()
    }

    pub fn events_for(&self, trace_id: &str) -> Vec<TraceEvent> {
        self.events
            .lock()
            .expect("trace lock")
            .iter()
            .filter(|e| e.trace_id == trace_id)
            .cloned()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.events.lock().expect("trace lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Renders events as JSONL, one event per line.
    pub fn to_jsonl(events: &[TraceEvent]) -> String {
        let mut out = String::new();
        for e in events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sequence_numbers_are_monotonic() {
        let log = TraceLog::new();
        let a = log.emit("t1", "one", json!({}));
        let b = log.emit("t1", "two", json!({}));
        let c = log.emit("t2", "three", json!({}));
        assert!(a < b && b < c);
        assert_eq!(log.events_for("t1").len(), 2);
    }

    #[test]
    fn jsonl_round_trips() {
        let log = TraceLog::new();
        log.emit("t1", "kind", json!({"x": 1}));
        let text = TraceLog::to_jsonl(&log.snapshot());
        let parsed: TraceEvent = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(parsed.kind, "kind");
    }
}
