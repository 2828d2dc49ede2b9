//! Pairwise ranking: exhaustive all-pairs scoring and comparison sorts
//! that use the comparator as their predicate.

use crate::{Comparator, RankingError};
use skein_core::{Document, Query, RankedList};
use std::cmp::Ordering;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairwiseStrategy {
    /// Evaluates every ordered pair (both directions); score = wins.
    AllPairs,
    HeapSort,
    BubbleSort,
}

impl PairwiseStrategy {
    fn tag(&self) -> &'static str {
        match self {
            PairwiseStrategy::AllPairs => "pairwise-all-pairs",
            PairwiseStrategy::HeapSort => "pairwise-heap-sort",
            PairwiseStrategy::BubbleSort => "pairwise-bubble-sort",
        }
    }
}

/// Ranks documents with pairwise comparator judgments.
pub fn pairwise_rank(
    query: &Query,
    docs: &[Document],
    comparator: &Comparator,
    strategy: PairwiseStrategy,
) -> Result<RankedList, RankingError> {
    match strategy {
        PairwiseStrategy::AllPairs => {
            let wins = all_pairs_wins(query, docs, comparator)?;
            let mut order: Vec<usize> = (0..docs.len()).collect();
            order.sort_by(|&a, &b| wins[b].cmp(&wins[a]).then_with(|| a.cmp(&b)));
            let items: Vec<_> = order.iter().map(|&i| docs[i].id.clone()).collect();
            let scores: BTreeMap<_, _> = docs
                .iter()
                .zip(&wins)
                .map(|(d, &w)| (d.id.clone(), w as f64))
                .collect();
            Ok(RankedList::new(items, strategy.tag()).with_scores(scores))
        }
        PairwiseStrategy::HeapSort => {
            let order = heap_sort(query, docs, comparator)?;
            let items = order.iter().map(|&i| docs[i].id.clone()).collect();
            Ok(RankedList::new(items, strategy.tag()))
        }
        PairwiseStrategy::BubbleSort => {
            let order = bubble_sort(query, docs, comparator)?;
            let items = order.iter().map(|&i| docs[i].id.clone()).collect();
            Ok(RankedList::new(items, strategy.tag()))
        }
    }
}

/// Number of pairwise wins per document over all ordered pairs (both
/// directions are evaluated).
fn all_pairs_wins(
    query: &Query,
    docs: &[Document],
    comparator: &Comparator,
) -> Result<Vec<u64>, RankingError> {
    let mut wins = vec![0u64; docs.len()];
    for i in 0..docs.len() {
        for j in 0..docs.len() {
            if i == j {
                continue;
            }
            if comparator.prefer(query, &docs[i], &docs[j])? == Ordering::Greater {
                wins[i] += 1;
            }
        }
    }
    Ok(wins)
}

fn bubble_sort(
    query: &Query,
    docs: &[Document],
    comparator: &Comparator,
) -> Result<Vec<usize>, RankingError> {
    let mut order: Vec<usize> = (0..docs.len()).collect();
    let n = order.len();
    if n < 2 {
        return Ok(order);
    }
    loop {
        let mut swapped = false;
        for j in 0..n - 1 {
            if comparator.prefer(query, &docs[order[j + 1]], &docs[order[j]])?
                == Ordering::Greater
            {
                order.swap(j, j + 1);
                swapped = true;
            }
        }
        if !swapped {
            return Ok(order);
        }
    }
}

fn heap_sort(
    query: &Query,
    docs: &[Document],
    comparator: &Comparator,
) -> Result<Vec<usize>, RankingError> {
    // Min-heap on relevance: moving the minimum to the end each pass
    // sorts the array descending, i.e. best first.
    let mut heap: Vec<usize> = (0..docs.len()).collect();
    let n = heap.len();
    if n < 2 {
        return Ok(heap);
    }

    fn sift_down(
        heap: &mut [usize],
        mut root: usize,
        end: usize,
        query: &Query,
        docs: &[Document],
        comparator: &Comparator,
    ) -> Result<(), RankingError> {
        loop {
            let mut smallest = root;
            for child in [2 * root + 1, 2 * root + 2] {
                if child < end
                    && comparator.prefer(query, &docs[heap[smallest]], &docs[heap[child]])?
                        == Ordering::Greater
                {
                    smallest = child;
                }
            }
            if smallest == root {
                return Ok(());
            }
            heap.swap(root, smallest);
            root = smallest;
        }
    }

    for root in (0..n / 2).rev() {
        sift_down(&mut heap, root, n, query, docs, comparator)?;
    }
    for end in (1..n).rev() {
        heap.swap(0, end);
        sift_down(&mut heap, 0, end, query, docs, comparator)?;
    }
    Ok(heap)
}
