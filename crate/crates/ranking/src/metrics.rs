//! Rank quality metrics.

use crate::RankingError;
use skein_core::{DocId, RankedList};
use std::collections::BTreeMap;

/// Normalized discounted cumulative gain at cutoff `k`, with linear gains
/// discounted by log2(position + 1). An all-zero gain vector carries no
/// signal and is defined as 1.0.
pub fn ndcg(
    ranking: &RankedList,
    gains: &BTreeMap<DocId, f64>,
    k: usize,
) -> Result<f64, RankingError> {
    if k == 0 {
        return Err(RankingError::BadK);
    }
    for id in &ranking.items {
        match gains.get(id) {
            None => return Err(RankingError::MissingRelevance(id.clone())),
            Some(&g) if g < 0.0 => return Err(RankingError::NegativeGain(g)),
            Some(_) => {}
        }
    }

    let dcg_of = |ordered: &[f64]| -> f64 {
        ordered
            .iter()
            .take(k)
            .enumerate()
            .map(|(i, g)| g / ((i + 2) as f64).log2())
            .sum()
    };

    let actual: Vec<f64> = ranking.items.iter().map(|id| gains[id]).collect();
    let mut ideal = actual.clone();
    ideal.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));

    let idcg = dcg_of(&ideal);
    if idcg == 0.0 {
        return Ok(1.0);
    }
    Ok(dcg_of(&actual) / idcg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gains(pairs: &[(&str, f64)]) -> BTreeMap<DocId, f64> {
        pairs.iter().map(|(id, g)| (id.to_string(), *g)).collect()
    }

    fn list(ids: &[&str]) -> RankedList {
        RankedList::new(ids.iter().map(|s| s.to_string()).collect(), "test")
    }

    #[test]
    fn ideal_order_scores_one() {
        let g = gains(&[("a", 3.0), ("b", 2.0), ("c", 1.0)]);
        assert_eq!(ndcg(&list(&["a", "b", "c"]), &g, 3).unwrap(), 1.0);
    }

    #[test]
    fn reversed_order_matches_hand_computation() {
        let g = gains(&[("a", 3.0), ("b", 2.0), ("c", 1.0)]);
        let got = ndcg(&list(&["c", "b", "a"]), &g, 3).unwrap();
        assert!((got - 0.7897).abs() < 1e-3, "got {got}");
    }

    #[test]
    fn all_zero_gains_define_one() {
        let g = gains(&[("a", 0.0), ("b", 0.0)]);
        assert_eq!(ndcg(&list(&["b", "a"]), &g, 2).unwrap(), 1.0);
    }

    #[test]
    fn cutoff_and_validation() {
        let g = gains(&[("a", 1.0), ("b", 2.0)]);
        assert!(matches!(
            ndcg(&list(&["a", "b"]), &g, 0),
            Err(RankingError::BadK)
        ));
        assert!(matches!(
            ndcg(&list(&["a", "missing"]), &g, 2),
            Err(RankingError::MissingRelevance(_))
        ));
        // k beyond the list length just truncates.
        assert!(ndcg(&list(&["b", "a"]), &g, 10).unwrap() <= 1.0);
    }

    #[test]
    fn never_exceeds_one() {
        let g = gains(&[("a", 5.0), ("b", 0.5), ("c", 2.5), ("d", 4.0)]);
        for perm in [["a", "b", "c", "d"], ["d", "c", "b", "a"], ["b", "d", "a", "c"]] {
            let got = ndcg(&list(&perm), &g, 4).unwrap();
            assert!(got <= 1.0 + 1e-12);
        }
    }
}
