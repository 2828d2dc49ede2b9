//! Deterministic metadata-policy orderings: lexicographic descending sort
//! over a priority order of the four metadata features.

use crate::RankingError;
use serde::{Deserialize, Serialize};
use skein_core::{Document, RankedList};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKey {
    Recency,
    Quality,
    Relevance,
    Authority,
}

impl FeatureKey {
    /// Feature value of a document; absent metadata ranks as 0. Recency is
    /// the publication time in epoch seconds, so newer sorts higher.
    pub fn value(&self, doc: &Document) -> f64 {
        match self {
            FeatureKey::Recency => doc.metadata.published_at.unwrap_or(0) as f64,
            FeatureKey::Quality => doc.metadata.quality.unwrap_or(0.0),
            FeatureKey::Relevance => doc.metadata.relevance.unwrap_or(0.0),
            FeatureKey::Authority => doc.metadata.authority.unwrap_or(0.0),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            FeatureKey::Recency => "recency",
            FeatureKey::Quality => "quality",
            FeatureKey::Relevance => "relevance",
            FeatureKey::Authority => "authority",
        }
    }
}

/// A permutation of the four feature keys, most significant first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankPolicy {
    pub keys: [FeatureKey; 4],
}

impl RankPolicy {
    pub fn new(keys: [FeatureKey; 4]) -> Result<Self, RankingError> {
        for (i, a) in keys.iter().enumerate() {
            for b in keys.iter().skip(i + 1) {
                if a == b {
                    return Err(RankingError::UnparseableReply(format!(
                        "policy repeats feature {}",
                        a.name()
                    )));
                }
            }
        }
        Ok(Self { keys })
    }

    /// recency > quality > relevance > authority
    pub fn p1() -> Self {
        Self {
            keys: [
                FeatureKey::Recency,
                FeatureKey::Quality,
                FeatureKey::Relevance,
                FeatureKey::Authority,
            ],
        }
    }

    /// quality > relevance > recency > authority
    pub fn p2() -> Self {
        Self {
            keys: [
                FeatureKey::Quality,
                FeatureKey::Relevance,
                FeatureKey::Recency,
                FeatureKey::Authority,
            ],
        }
    }
}

impl fmt::Display for RankPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}",
            self.keys
                .iter()
                .map(|k| k.name())
                .collect::<Vec<_>>()
                .join(">")
        )
    }
}

impl FromStr for RankPolicy {
    type Err = RankingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('>').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(RankingError::UnparseableReply(format!(
                "policy must name all four features, got {s:?}"
            )));
        }
        let mut keys = Vec::new();
        for p in parts {
            keys.push(match p {
                "recency" => FeatureKey::Recency,
                "quality" => FeatureKey::Quality,
                "relevance" => FeatureKey::Relevance,
                "authority" => FeatureKey::Authority,
                other => {
                    return Err(RankingError::UnparseableReply(format!(
                        "unknown feature {other:?}"
                    )))
                }
            });
        }
        RankPolicy::new([keys[0], keys[1], keys[2], keys[3]])
    }
}

/// Sorts documents lexicographically descending by the policy's feature
/// order. The sort is stable, so full ties keep their input order.
pub fn apply_metadata_policy(docs: &[Document], policy: &RankPolicy) -> RankedList {
    let mut indexed: Vec<(usize, &Document)> = docs.iter().enumerate().collect();
    indexed.sort_by(|(_, a), (_, b)| {
        for key in &policy.keys {
            let cmp = key
                .value(b)
                .partial_cmp(&key.value(a))
                .unwrap_or(Ordering::Equal);
            if cmp != Ordering::Equal {
                return cmp;
            }
        }
        Ordering::Equal
    });
    RankedList::new(
        indexed.into_iter().map(|(_, d)| d.id.clone()).collect(),
        format!("metadata-policy({policy})"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use skein_core::DocMetadata;

    fn doc(id: &str, published: i64, quality: f64, relevance: f64, authority: f64) -> Document {
        Document {
            id: id.into(),
            title: id.into(),
            content: String::new(),
            metadata: DocMetadata {
                site_name: None,
                published_at: Some(published),
                quality: Some(quality),
                authority: Some(authority),
                relevance: Some(relevance),
            },
        }
    }

    #[test]
    fn p1_orders_by_recency_first() {
        let docs = vec![
            doc("old", 100, 0.9, 0.9, 0.9),
            doc("new", 300, 0.1, 0.1, 0.1),
            doc("mid", 200, 0.5, 0.5, 0.5),
        ];
        let out = apply_metadata_policy(&docs, &RankPolicy::p1());
        assert_eq!(out.items, vec!["new", "mid", "old"]);
    }

    #[test]
    fn full_ties_preserve_input_order() {
        let docs = vec![
            doc("first", 100, 0.5, 0.5, 0.5),
            doc("second", 100, 0.5, 0.5, 0.5),
            doc("third", 100, 0.5, 0.5, 0.5),
        ];
        let out = apply_metadata_policy(&docs, &RankPolicy::p1());
        assert_eq!(out.items, vec!["first", "second", "third"]);
    }

    #[test]
    fn p1_and_p2_disagree_when_quality_and_recency_conflict() {
        let docs = vec![
            doc("fresh-but-poor", 900, 0.2, 0.5, 0.5),
            doc("stale-but-good", 100, 0.9, 0.5, 0.5),
        ];
        let by_p1 = apply_metadata_policy(&docs, &RankPolicy::p1());
        let by_p2 = apply_metadata_policy(&docs, &RankPolicy::p2());
        assert_eq!(by_p1.items[0], "fresh-but-poor");
        assert_eq!(by_p2.items[0], "stale-but-good");
    }

    #[test]
    fn missing_metadata_ranks_as_zero() {
        let bare = Document::new("bare", "", "");
        let scored = doc("scored", 10, 0.1, 0.1, 0.1);
        let out = apply_metadata_policy(&[bare, scored], &RankPolicy::p1());
        assert_eq!(out.items, vec!["scored", "bare"]);
    }

    #[test]
    fn policy_parsing_round_trips() {
        let p: RankPolicy = "recency>quality>relevance>authority".parse().unwrap();
        assert_eq!(p, RankPolicy::p1());
        assert_eq!(p.to_string(), "recency>quality>relevance>authority");
        assert!("recency>quality".parse::<RankPolicy>().is_err());
        assert!("recency>quality>relevance>relevance"
            .parse::<RankPolicy>()
            .is_err());
    }
}
