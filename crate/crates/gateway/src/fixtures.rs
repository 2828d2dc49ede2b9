//! Fixture-driven mock provider.
//!
//! Fixture files are JSONL, one object per line:
//!
//! ```json
//! {"tag": "triage", "match": {"contains": ["Mount Tai"]}, "response": "WriterOnly"}
//! {"tag": "pointwise", "match": {"contains": []}, "response": "yes",
//!  "logprobs": [["yes", -0.693147]]}
//! ```
//!
//! A fixture fires when its tag equals the request tag and every string in
//! `contains` occurs in the concatenated message text. Lookup is
//! first-match in declaration order; two fixtures with the same tag and the
//! same `contains` set are rejected at load time as ambiguous. The provider
//! is a pure function of (fixtures, request, seed).

use crate::{
    content_digest, embed::pseudo_embedding, ChatRequest, ChatResponse, Embedding, GatewayError,
    Provider, EMBED_DIM, EMBED_SEED,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Matcher {
    #[serde(default)]
    pub contains: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub tag: String,
    #[serde(default, rename = "match")]
    pub matcher: Matcher,
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logprobs: Option<Vec<(String, f64)>>,
}

impl Fixture {
    pub fn new(tag: &str, contains: &[&str], response: &str) -> Self {
        Self {
            tag: tag.to_string(),
            matcher: Matcher {
                contains: contains.iter().map(|s| s.to_string()).collect(),
            },
            response: response.to_string(),
            logprobs: None,
        }
    }

    fn matches(&self, tag: &str, text: &str) -> bool {
        self.tag == tag && self.matcher.contains.iter().all(|c| text.contains(c))
    }
}

/// Deterministic scripted provider.
#[derive(Debug)]
pub struct MockProvider {
    fixtures: Vec<Fixture>,
    embed_seed: u64,
    embed_dim: usize,
}

impl MockProvider {
    pub fn new(fixtures: Vec<Fixture>) -> Result<Self, GatewayError> {
        check_ambiguity(&fixtures)?;
        Ok(Self {
            fixtures,
            embed_seed: EMBED_SEED,
            embed_dim: EMBED_DIM,
        })
    }

    /// Parses one JSONL fixture file.
    pub fn from_jsonl(text: &str) -> Result<Self, GatewayError> {
        let mut fixtures = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fixture: Fixture = serde_json::from_str(line).map_err(|e| {
                GatewayError::FixtureParse(format!("line {}: {e}", lineno + 1))
            })?;
            if let Some(logprobs) = &fixture.logprobs {
                if logprobs.iter().any(|(_, lp)| *lp > 0.0) {
                    return Err(GatewayError::FixtureParse(format!(
                        "line {}: logprobs must be <= 0",
                        lineno + 1
                    )));
                }
            }
            fixtures.push(fixture);
        }
        Self::new(fixtures)
    }

    /// Loads and concatenates several JSONL fixture files.
    pub fn from_files<P: AsRef<Path>>(paths: &[P]) -> Result<Self, GatewayError> {
        let mut combined = String::new();
        for p in paths {
            let text = std::fs::read_to_string(p.as_ref()).map_err(|e| {
                GatewayError::FixtureParse(format!("{}: {e}", p.as_ref().display()))
            })?;
            combined.push_str(&text);
            combined.push('\n');
        }
        Self::from_jsonl(&combined)
    }

    pub fn fixture_count(&self) -> usize {
        self.fixtures.len()
    }
}

fn check_ambiguity(fixtures: &[Fixture]) -> Result<(), GatewayError> {
    let mut seen: BTreeSet<(String, Vec<String>)> = BTreeSet::new();
    for f in fixtures {
        let mut contains = f.matcher.contains.clone();
        contains.sort();
        let key = (f.tag.clone(), contains);
        if !seen.insert(key) {
            return Err(GatewayError::AmbiguousFixtures(format!(
                "tag {:?} with contains {:?} declared twice",
                f.tag, f.matcher.contains
            )));
        }
    }
    Ok(())
}

impl Provider for MockProvider {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let text = request.full_text();
        let hit = self
            .fixtures
            .iter()
            .find(|f| f.matches(&request.tag, &text));
        match hit {
            Some(f) => Ok(ChatResponse {
                text: f.response.clone(),
                token_logprobs: f.logprobs.clone(),
            }),
            None => Err(GatewayError::NoFixtureMatch {
                tag: request.tag.clone(),
                content_digest: content_digest(&text),
            }),
        }
    }

    fn embed(&self, text: &str) -> Result<Embedding, GatewayError> {
        if text.trim().is_empty() {
            return Err(GatewayError::EmptyText);
        }
        Ok(pseudo_embedding(text, self.embed_seed, self.embed_dim))
    }
}
