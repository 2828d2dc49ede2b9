//! Independent per-document relevance scoring.

use crate::{Comparator, RankingError};
use skein_core::{DocId, Document, Query};
use std::collections::BTreeMap;

/// Scores every candidate independently. Empty input yields an empty map.
pub fn pointwise_scores(
    query: &Query,
    docs: &[Document],
    comparator: &Comparator,
) -> Result<BTreeMap<DocId, f64>, RankingError> {
    let mut scores = BTreeMap::new();
    for doc in docs {
        scores.insert(doc.id.clone(), comparator.score(query, doc)?);
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_map_passes_through() {
        let map: BTreeMap<DocId, f64> =
            [("a".to_string(), 0.9), ("b".to_string(), 0.1)].into();
        let cmp = Comparator::oracle(map.clone());
        let docs = vec![
            Document::new("a", "", ""),
            Document::new("b", "", ""),
        ];
        let scores = pointwise_scores(&Query::new("q", "q"), &docs, &cmp).unwrap();
        assert_eq!(scores, map);
    }

    #[test]
    fn empty_docs_empty_map() {
        let cmp = Comparator::oracle(BTreeMap::new());
        let scores = pointwise_scores(&Query::new("q", "q"), &[], &cmp).unwrap();
        assert!(scores.is_empty());
    }
}
