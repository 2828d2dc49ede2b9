//! In-process stub tools used by tests and local deployments: a weather
//! lookup, a calculator, web search over a local corpus, an echo tool, and
//! two fault-injection stubs (one that always fails, one that stalls past
//! its latency bound).

use crate::ToolError;
use serde_json::json;
use skein_core::{Document, ToolId, Value};
use std::collections::{BTreeMap, HashMap};
use std::time::Duration;

/// Hosts builtin endpoints and the local search corpus.
pub struct StubHost {
    corpus: Vec<Document>,
}

impl StubHost {
    pub fn new(corpus: Vec<Document>) -> Self {
        Self { corpus }
    }

    pub fn empty() -> Self {
        Self { corpus: Vec::new() }
    }

    /// Loads a corpus from a JSON array of documents.
    pub fn from_corpus_json(text: &str) -> Result<Self, ToolError> {
        let corpus: Vec<Document> = serde_json::from_str(text)
            .map_err(|e| ToolError::InvalidManifest(format!("corpus: {e}")))?;
        Ok(Self::new(corpus))
    }

    pub fn corpus(&self) -> &[Document] {
        &self.corpus
    }

    /// Dispatches one builtin call. `tool` is only used for error payloads.
    pub fn call(&self, tag: &str, tool: &ToolId, args: &Value) -> Result<Value, ToolError> {
        match tag {
            "weather" => weather(args),
            "calculator" => calculator(tool, args),
            "web-search" => Ok(self.web_search(args)),
            "echo" => Ok(json!({ "echo": args })),
            "broken" => Err(ToolError::RemoteFault {
                tool: tool.clone(),
                message: "injected fault".into(),
            }),
            "stall" => {
                // Sleeps long enough that any reasonable latency bound trips.
                std::thread::sleep(Duration::from_millis(10_000));
                Ok(json!({ "stalled": true }))
            }
            other => Err(ToolError::RemoteFault {
                tool: tool.clone(),
                message: format!("unknown builtin {other:?}"),
            }),
        }
    }

    fn web_search(&self, args: &Value) -> Value {
        let query = args
            .get("query")
            .and_then(Value::as_str)
            .unwrap_or_default();
        let top_k = args
            .get("top_k")
            .and_then(Value::as_u64)
            .unwrap_or(1)
            .max(1) as usize;

        let query_tokens = tokens(query);
        let n_docs = self.corpus.len().max(1) as f64;
        let mut df: HashMap<&str, usize> = HashMap::new();
        let doc_tokens: Vec<BTreeMap<String, usize>> = self
            .corpus
            .iter()
            .map(|d| {
                let mut counts = BTreeMap::new();
                for t in tokens(&format!("{} {}", d.title, d.content)) {
                    *counts.entry(t).or_insert(0) += 1;
                }
                counts
            })
            .collect();
        for counts in &doc_tokens {
            for t in counts.keys() {
                *df.entry(t.as_str()).or_insert(0) += 1;
            }
        }

        // Rare shared terms dominate: idf-weighted token overlap.
        let mut scored: Vec<(usize, f64)> = self
            .corpus
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let score: f64 = query_tokens
                    .iter()
                    .filter(|t| doc_tokens[i].contains_key(*t))
                    .map(|t| {
                        let d = df.get(t.as_str()).copied().unwrap_or(1) as f64;
                        (1.0 + n_docs / d).ln()
                    })
                    .sum();
                (i, score)
            })
            .filter(|(_, s)| *s > 0.0)
            .collect();
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));

        let hits: Vec<Value> = scored
            .iter()
            .take(top_k)
            .map(|(i, score)| {
                let d = &self.corpus[*i];
                json!({
                    "id": d.id,
                    "title": d.title,
                    "snippet": d.content,
                    "score": score,
                })
            })
            .collect();
        let number = scored
            .first()
            .and_then(|(i, _)| first_number(&self.corpus[*i].content));
        json!({ "query": query, "hits": hits, "number": number })
    }
}

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// First integer in the text, tolerating thousands separators ("1,545").
pub fn first_number(text: &str) -> Option<i64> {
    let mut digits = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c.is_ascii_digit() {
            digits.push(c);
            while let Some(&next) = chars.peek() {
                if next.is_ascii_digit() {
                    digits.push(next);
                    chars.next();
                } else if next == ',' {
                    chars.next();
                    match chars.peek() {
                        Some(d) if d.is_ascii_digit() => {}
                        _ => break,
                    }
                } else {
                    break;
                }
            }
            return digits.parse().ok();
        }
    }
    None
}

fn weather(args: &Value) -> Result<Value, ToolError> {
    let city = args
        .get("city")
        .and_then(Value::as_str)
        .unwrap_or_default();
    let (condition, low, high) = match city {
        "Beijing" => ("sunny", 12, 25),
        "Shanghai" => ("cloudy", 16, 23),
        "Harbin" => ("snow", -12, -2),
        _ => ("clear", 14, 21),
    };
    Ok(json!({ "condition": condition, "low_c": low, "high_c": high, "city": city }))
}

/// Pulls a number out of a calculator argument, accepting raw numbers,
/// numeric strings, or structured upstream outputs carrying a numeric
/// field — a search result's extracted "number", or a prior calculation's
/// "result".
fn numeric(tool: &ToolId, value: &Value) -> Result<f64, ToolError> {
    if let Some(n) = value.as_f64() {
        return Ok(n);
    }
    if let Some(s) = value.as_str() {
        if let Ok(n) = s.trim().parse::<f64>() {
            return Ok(n);
        }
    }
    if let Some(map) = value.as_object() {
        for key in ["number", "result", "value"] {
            if let Some(v) = map.get(key) {
                if let Some(n) = v.as_f64() {
                    return Ok(n);
                }
            }
        }
    }
    Err(ToolError::SchemaViolation(format!(
        "{tool}: argument is not numeric: {}",
        skein_gateway::value_digest(value)
    )))
}

fn calculator(tool: &ToolId, args: &Value) -> Result<Value, ToolError> {
    let a = numeric(tool, args.get("a").unwrap_or(&Value::Null))?;
    let b = numeric(tool, args.get("b").unwrap_or(&Value::Null))?;
    let op = args.get("op").and_then(Value::as_str).unwrap_or("add");
    let result = match op {
        "add" => a + b,
        "sub" => a - b,
        "mul" => a * b,
        "div" => {
            if b == 0.0 {
                return Err(ToolError::RemoteFault {
                    tool: tool.clone(),
                    message: "division by zero".into(),
                });
            }
            a / b
        }
        "abs_diff" => (a - b).abs(),
        other => {
            return Err(ToolError::SchemaViolation(format!(
                "unknown calculator op {other:?}"
            )))
        }
    };
    // Integral results serialize as integers, which keeps downstream
    // prompts and fixtures readable.
    let value = if result.fract() == 0.0 && result.abs() < i64::MAX as f64 {
        json!(result as i64)
    } else {
        json!(result)
    };
    Ok(json!({ "op": op, "result": value }))
}
