//! Randomized oracle-equivalence sweeps: every ranking algorithm is run
//! against a numeric-relevance oracle on random lists and compared with
//! brute-force expectations.

use skein_core::rng::SplitMix64;
use skein_core::{DocId, Document, Query};
use skein_ranking::{
    pairwise_rank, sliding_window_rank, tournament_rank, Comparator, PairwiseStrategy,
    TournamentConfig,
};
use std::collections::BTreeMap;

struct Case {
    query: Query,
    docs: Vec<Document>,
    gains: BTreeMap<DocId, f64>,
    /// Ids sorted by gain descending: the oracle order.
    oracle_order: Vec<DocId>,
}

/// Random list with distinct gains and a margin of at least 2 between the
/// top two documents.
fn random_case(rng: &mut SplitMix64, max_m: usize) -> Case {
    let m = 2 + rng.next_below(max_m - 1);
    let mut gains: Vec<f64> = (0..m).map(|i| i as f64).collect();
    // Distinct by construction; give the winner a clear margin.
    gains[m - 1] += 2.0;
    rng.shuffle(&mut gains);

    let docs: Vec<Document> = (0..m)
        .map(|i| Document::new(format!("d{i:03}"), "", ""))
        .collect();
    let gain_map: BTreeMap<DocId, f64> = docs
        .iter()
        .zip(&gains)
        .map(|(d, &g)| (d.id.clone(), g))
        .collect();
    let mut oracle_order: Vec<DocId> = gain_map.keys().cloned().collect();
    oracle_order.sort_by(|a, b| gain_map[b].partial_cmp(&gain_map[a]).unwrap());

    Case {
        query: Query::new("q", "random case"),
        docs,
        gains: gain_map,
        oracle_order,
    }
}

#[test]
fn pairwise_strategies_reproduce_oracle_order_on_random_lists() {
    let mut rng = SplitMix64::new(0xA11CE);
    for _ in 0..60 {
        let case = random_case(&mut rng, 25);
        for strategy in [
            PairwiseStrategy::AllPairs,
            PairwiseStrategy::HeapSort,
            PairwiseStrategy::BubbleSort,
        ] {
            let cmp = Comparator::oracle(case.gains.clone());
            let out = pairwise_rank(&case.query, &case.docs, &cmp, strategy).unwrap();
            assert_eq!(out.items, case.oracle_order, "{strategy:?}");
        }
    }
}

#[test]
fn sliding_window_places_global_argmax_first() {
    let mut rng = SplitMix64::new(0xB0B);
    for round in 0..80 {
        let case = random_case(&mut rng, 60);
        let m = case.docs.len();
        // Window and step with the overlap guarantee s <= w - 1.
        let w = 2 + rng.next_below(m.min(12));
        let s = 1 + rng.next_below(w - 1);
        let cmp = Comparator::oracle(case.gains.clone());
        let out = sliding_window_rank(&case.query, &case.docs, w, s, &cmp).unwrap();
        assert_eq!(
            out.items[0], case.oracle_order[0],
            "round {round}: m={m} w={w} s={s}"
        );
    }
}

#[test]
fn tournament_places_global_argmax_first() {
    let mut rng = SplitMix64::new(0xC0FFEE);
    for round in 0..60 {
        let case = random_case(&mut rng, 60);
        let config = TournamentConfig {
            group_size: 8,
            advance_n: 4,
            rounds_r: 5,
            seed: rng.next_u64(),
        };
        let cmp = Comparator::oracle(case.gains.clone());
        let out = tournament_rank(&case.query, &case.docs, &config, &cmp, 1).unwrap();
        assert_eq!(out.items[0], case.oracle_order[0], "round {round}");
        // Permutation invariant: same multiset in and out.
        let mut sorted = out.items.clone();
        sorted.sort();
        let mut expected: Vec<DocId> = case.gains.keys().cloned().collect();
        expected.sort();
        assert_eq!(sorted, expected);
    }
}

#[test]
fn all_ranking_ops_return_permutations() {
    let mut rng = SplitMix64::new(77);
    let case = random_case(&mut rng, 40);
    let mut expected: Vec<DocId> = case.gains.keys().cloned().collect();
    expected.sort();

    let cmp = Comparator::oracle(case.gains.clone());
    let slid = sliding_window_rank(&case.query, &case.docs, 5, 3, &cmp).unwrap();
    let mut got = slid.items.clone();
    got.sort();
    assert_eq!(got, expected);

    let paired = pairwise_rank(&case.query, &case.docs, &cmp, PairwiseStrategy::HeapSort).unwrap();
    let mut got = paired.items.clone();
    got.sort();
    assert_eq!(got, expected);
}
