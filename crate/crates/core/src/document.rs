//! Retrievable evidence documents and ranked lists.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Document identifier within a candidate set.
pub type DocId = String;

/// Ranking-relevant metadata. Scores live in [0, 1]; publication time is
/// epoch seconds. All fields optional — absent scores rank as 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DocMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_at: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub authority: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevance: Option<f64>,
}

impl DocMetadata {
    /// Checks the [0, 1] range invariant on the scores that are present.
    pub fn scores_in_range(&self) -> bool {
        [self.quality, self.authority, self.relevance]
            .into_iter()
            .flatten()
            .all(|s| (0.0..=1.0).contains(&s))
    }
}

/// One retrievable document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: DocId,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub content: String,
    #[serde(default)]
    pub metadata: DocMetadata,
}

impl Document {
    pub fn new(id: impl Into<DocId>, title: impl Into<String>, content: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            content: content.into(),
            metadata: DocMetadata::default(),
        }
    }
}

/// An ordered ranking with provenance of how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    /// Document ids, best first. No duplicates.
    pub items: Vec<DocId>,
    /// Tag of the producing algorithm, e.g. "tournament(stages=8,rounds=5)".
    pub method: String,
    /// Optional per-document scores; covers every item when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<BTreeMap<DocId, f64>>,
}

impl RankedList {
    pub fn new(items: Vec<DocId>, method: impl Into<String>) -> Self {
        Self {
            items,
            method: method.into(),
            scores: None,
        }
    }

    pub fn with_scores(mut self, scores: BTreeMap<DocId, f64>) -> Self {
        self.scores = Some(scores);
        self
    }

    /// Invariant check: no duplicate ids, and scores (when present) cover
    /// exactly the ranked items.
    pub fn well_formed(&self) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        if !self.items.iter().all(|id| seen.insert(id)) {
            return false;
        }
        match &self.scores {
            None => true,
            Some(scores) => {
                scores.len() == self.items.len()
                    && self.items.iter().all(|id| scores.contains_key(id))
            }
        }
    }
}
