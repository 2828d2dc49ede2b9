//! Teacher-to-student pair distillation: pair generation from a teacher
//! ranking and the pairwise ordering loss.

use crate::RankingError;
use skein_core::{DocId, RankedList};
use std::collections::{BTreeMap, BTreeSet};

/// All m(m-1)/2 unordered pairs of a teacher ranking, emitted once each as
/// (better, worse).
pub fn ranknet_pairs(teacher: &RankedList) -> Result<Vec<(DocId, DocId)>, RankingError> {
    let m = teacher.items.len();
    if m < 2 {
        return Err(RankingError::TooFewDocs { need: 2, got: m });
    }
    let mut seen = BTreeSet::new();
    for id in &teacher.items {
        if !seen.insert(id) {
            return Err(RankingError::DuplicateDoc(id.clone()));
        }
    }
    let mut pairs = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            pairs.push((teacher.items[i].clone(), teacher.items[j].clone()));
        }
    }
    Ok(pairs)
}

/// Numerically stable ln(1 + e^x).
fn softplus(x: f64) -> f64 {
    if x > 35.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Pairwise ordering loss: over every pair where the teacher ranks i above
/// j (lower rank number is better), sum ln(1 + exp(s_i - s_j)) of the
/// student scores.
///
/// Taken literally, the sum shrinks when teacher-better documents receive
/// *lower* student scores. Student models that emit "higher is better"
/// scores should set `negate_scores`, which flips s to -s before the sum;
/// the default leaves the formula untouched.
pub fn ranknet_loss(
    teacher_ranks: &BTreeMap<DocId, i64>,
    student_scores: &BTreeMap<DocId, f64>,
    negate_scores: bool,
) -> Result<f64, RankingError> {
    if teacher_ranks.len() != student_scores.len()
        || !teacher_ranks.keys().all(|k| student_scores.contains_key(k))
    {
        return Err(RankingError::IdMismatch);
    }
    let sign = if negate_scores { -1.0 } else { 1.0 };
    let mut loss = 0.0;
    for (id_i, &rank_i) in teacher_ranks {
        for (id_j, &rank_j) in teacher_ranks {
            if rank_i < rank_j {
                let s_i = sign * student_scores[id_i];
                let s_j = sign * student_scores[id_j];
                loss += softplus(s_i - s_j);
            }
        }
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(ids: &[&str]) -> RankedList {
        RankedList::new(ids.iter().map(|s| s.to_string()).collect(), "teacher")
    }

    #[test]
    fn pair_counts_are_binomial() {
        for m in 2..=10usize {
            let ids: Vec<String> = (0..m).map(|i| format!("d{i}")).collect();
            let refs: Vec<&str> = ids.iter().map(|s| s.as_str()).collect();
            let pairs = ranknet_pairs(&list(&refs)).unwrap();
            assert_eq!(pairs.len(), m * (m - 1) / 2);
        }
    }

    #[test]
    fn two_docs_single_pair_in_teacher_order() {
        let pairs = ranknet_pairs(&list(&["a", "b"])).unwrap();
        assert_eq!(pairs, vec![("a".to_string(), "b".to_string())]);
    }

    #[test]
    fn pair_set_matches_brute_force_enumeration() {
        let teacher = list(&["a", "b", "c", "d", "e", "f", "g"]);
        let pairs: BTreeSet<_> = ranknet_pairs(&teacher).unwrap().into_iter().collect();
        let mut oracle = BTreeSet::new();
        for (i, better) in teacher.items.iter().enumerate() {
            for worse in teacher.items.iter().skip(i + 1) {
                oracle.insert((better.clone(), worse.clone()));
            }
        }
        assert_eq!(pairs, oracle);
    }

    #[test]
    fn duplicates_and_singletons_rejected() {
        assert!(matches!(
            ranknet_pairs(&list(&["a", "a"])),
            Err(RankingError::DuplicateDoc(_))
        ));
        assert!(matches!(
            ranknet_pairs(&list(&["a"])),
            Err(RankingError::TooFewDocs { .. })
        ));
    }

    fn ranks(pairs: &[(&str, i64)]) -> BTreeMap<DocId, i64> {
        pairs.iter().map(|(id, r)| (id.to_string(), *r)).collect()
    }

    fn scores(pairs: &[(&str, f64)]) -> BTreeMap<DocId, f64> {
        pairs.iter().map(|(id, s)| (id.to_string(), *s)).collect()
    }

    #[test]
    fn equal_scores_cost_ln_two_per_pair() {
        let loss = ranknet_loss(
            &ranks(&[("a", 1), ("b", 2)]),
            &scores(&[("a", 0.0), ("b", 0.0)]),
            false,
        )
        .unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-6);

        let loss3 = ranknet_loss(
            &ranks(&[("a", 1), ("b", 2), ("c", 3)]),
            &scores(&[("a", 0.0), ("b", 0.0), ("c", 0.0)]),
            false,
        )
        .unwrap();
        assert!((loss3 - 3.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn wide_margin_drives_loss_toward_zero() {
        // Teacher-better document scored 10 lower: the literal formula
        // rewards that direction.
        let loss = ranknet_loss(
            &ranks(&[("a", 1), ("b", 2)]),
            &scores(&[("a", -5.0), ("b", 5.0)]),
            false,
        )
        .unwrap();
        assert!((loss - 4.54e-5).abs() < 1e-6, "got {loss}");
    }

    #[test]
    fn negate_flag_flips_polarity() {
        let teacher = ranks(&[("a", 1), ("b", 2)]);
        let student = scores(&[("a", 5.0), ("b", -5.0)]);
        let literal = ranknet_loss(&teacher, &student, false).unwrap();
        let flipped = ranknet_loss(&teacher, &student, true).unwrap();
        assert!(literal > 5.0, "literal formula penalizes high-is-better");
        assert!(flipped < 1e-4, "negated scores reward high-is-better");
    }

    #[test]
    fn id_mismatch_rejected() {
        let err = ranknet_loss(
            &ranks(&[("a", 1), ("b", 2)]),
            &scores(&[("a", 0.0), ("c", 0.0)]),
            false,
        );
        assert!(matches!(err, Err(RankingError::IdMismatch)));
    }
}
