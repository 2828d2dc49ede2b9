//! The support predicate: does a set of cited documents fully support a
//! claim?

use crate::WriterError;
use skein_core::Document;
use skein_gateway::Gateway;
use std::collections::{BTreeSet, HashMap, HashSet};

/// Pluggable entailment check over (citation subset, claim) pairs.
pub enum SupportOracle {
    /// Explicit truth table: a claim maps to the exact set of citation
    /// subsets (1-based indices) that support it. Absent pairs are
    /// unsupported, so the table is total by construction.
    MockTable(HashMap<String, HashSet<BTreeSet<usize>>>),
    /// Model-backed entailment via a chat call under `tag`; the reply must
    /// start with SUPPORTED or NOT_SUPPORTED.
    ModelBacked { tag: String, gateway: Gateway },
}

impl SupportOracle {
    pub fn table(entries: impl IntoIterator<Item = (String, Vec<BTreeSet<usize>>)>) -> Self {
        SupportOracle::MockTable(
            entries
                .into_iter()
                .map(|(claim, subsets)| (claim, subsets.into_iter().collect()))
                .collect(),
        )
    }

    /// Whether the cited documents (1-based indices into `documents`)
    /// jointly support the claim.
    pub fn supports(
        &self,
        citations: &BTreeSet<usize>,
        claim: &str,
        documents: &[Document],
    ) -> Result<bool, WriterError> {
        match self {
            SupportOracle::MockTable(table) => Ok(table
                .get(claim)
                .map(|subsets| subsets.contains(citations))
                .unwrap_or(false)),
            SupportOracle::ModelBacked { tag, gateway } => {
                let mut evidence = String::new();
                for &idx in citations {
                    let doc = documents.get(idx.wrapping_sub(1)).ok_or(
                        WriterError::CitationOutOfRange {
                            index: idx,
                            count: documents.len(),
                        },
                    )?;
                    evidence.push_str(&format!("[{idx}] {}\n{}\n", doc.title, doc.content));
                }
                let reply = gateway.ask(
                    tag,
                    format!(
                        "Evidence:\n{evidence}\nClaim: {claim}\nIs the claim fully supported by the evidence? Answer SUPPORTED or NOT_SUPPORTED."
                    ),
                )?;
                let verdict = reply.text.trim().to_ascii_uppercase();
                if verdict.starts_with("NOT_SUPPORTED") {
                    Ok(false)
                } else if verdict.starts_with("SUPPORTED") {
                    Ok(true)
                } else {
                    Err(WriterError::ParseError(reply.text))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use skein_core::TraceLog;
    use skein_gateway::{Fixture, MockProvider};
    use std::sync::Arc;

    fn set(indices: &[usize]) -> BTreeSet<usize> {
        indices.iter().copied().collect()
    }

    #[test]
    fn table_lookup_is_total() {
        let oracle = SupportOracle::table([("the sky is blue".to_string(), vec![set(&[1])])]);
        assert!(oracle.supports(&set(&[1]), "the sky is blue", &[]).unwrap());
        assert!(!oracle.supports(&set(&[2]), "the sky is blue", &[]).unwrap());
        assert!(!oracle.supports(&set(&[1]), "an unknown claim", &[]).unwrap());
    }

    #[test]
    fn model_backed_parses_verdicts() {
        let provider = MockProvider::new(vec![
            Fixture::new("nli", &["blue"], "SUPPORTED"),
            Fixture::new("nli", &[], "NOT_SUPPORTED: no relevant evidence"),
        ])
        .unwrap();
        let gw = Gateway::new(Arc::new(provider), Arc::new(TraceLog::new()));
        let oracle = SupportOracle::ModelBacked {
            tag: "nli".into(),
            gateway: gw,
        };
        let docs = vec![
            Document::new("d1", "sky", "the sky is blue today"),
            Document::new("d2", "grass", "grass is green"),
        ];
        assert!(oracle.supports(&set(&[1]), "sky color", &docs).unwrap());
        assert!(!oracle.supports(&set(&[2]), "sky color", &docs).unwrap());
    }
}
