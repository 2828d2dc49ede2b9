//! Tournament ranking with a points system.
//!
//! Documents are shuffled (seeded) and dealt round-robin into groups; each
//! group's listwise winners earn a point and advance. Grouped stages
//! repeat until the survivors fit in one group; a final selection stage
//! then orders that group once and awards points by successive halving of
//! the advance ratio, so the overall winner is strictly separated from the
//! runners-up. The whole schedule runs `rounds_r` times with different
//! shuffles and per-document points accumulate across rounds; the final
//! order is by total points, ties broken by original position.
//!
//! Group evaluations within a stage are independent and may run in
//! parallel; given the seed, results are identical to sequential
//! execution.

use crate::{Comparator, RankingError};
use serde::{Deserialize, Serialize};
use skein_core::parallel::par_map;
use skein_core::rng::SplitMix64;
use skein_core::{DocId, Document, Query, RankedList};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TournamentConfig {
    pub group_size: usize,
    /// Winners per group, strictly between 0 and `group_size`.
    pub advance_n: usize,
    /// Independent tournament rounds whose points accumulate.
    pub rounds_r: usize,
    pub seed: u64,
}

impl TournamentConfig {
    fn validate(&self) -> Result<(), RankingError> {
        if self.advance_n == 0 || self.advance_n >= self.group_size || self.rounds_r == 0 {
            return Err(RankingError::BadTournament {
                group_size: self.group_size,
                advance_n: self.advance_n,
                rounds: self.rounds_r,
            });
        }
        Ok(())
    }
}

/// Runs the tournament. `threads` caps the parallelism of group
/// evaluation within each stage.
pub fn tournament_rank(
    query: &Query,
    docs: &[Document],
    config: &TournamentConfig,
    comparator: &Comparator,
    threads: usize,
) -> Result<RankedList, RankingError> {
    config.validate()?;
    let m = docs.len();
    if m == 0 {
        return Ok(RankedList::new(Vec::new(), "tournament(stages=0,rounds=0)"));
    }
    let index_of: BTreeMap<&str, usize> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| (d.id.as_str(), i))
        .collect();

    let mut points = vec![0u64; m];
    let mut stages = 0usize;

    for round in 0..config.rounds_r {
        let mut rng = SplitMix64::new(config.seed ^ (round as u64).wrapping_mul(0x9E3779B97F4A7C15));
        let mut survivors: Vec<usize> = (0..m).collect();
        let mut round_stages = 0usize;

        while survivors.len() > 1 {
            if survivors.len() > config.group_size {
                rng.shuffle(&mut survivors);
                let n_groups = survivors.len().div_ceil(config.group_size);
                let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n_groups];
                for (i, &doc) in survivors.iter().enumerate() {
                    groups[i % n_groups].push(doc);
                }

                let orderings: Vec<Result<Vec<DocId>, RankingError>> =
                    par_map(threads, &groups, |group| {
                        let window: Vec<&Document> = group.iter().map(|&i| &docs[i]).collect();
                        comparator.order(query, &window)
                    });

                let mut next = Vec::new();
                for ordering in orderings {
                    let ordering = ordering?;
                    for id in ordering.iter().take(config.advance_n) {
                        let idx = index_of[id.as_str()];
                        points[idx] += 1;
                        next.push(idx);
                    }
                }
                survivors = next;
                round_stages += 1;
            } else {
                // Final selection stage: one listwise call, points awarded
                // by successive halving of the advance ratio.
                let window: Vec<&Document> = survivors.iter().map(|&i| &docs[i]).collect();
                let ordering = comparator.order(query, &window)?;
                let ratio = config.advance_n as f64 / config.group_size as f64;
                let mut cut = survivors.len();
                while cut > 1 {
                    cut = ((cut as f64 * ratio).round() as usize)
                        .clamp(1, cut - 1);
                    for id in ordering.iter().take(cut) {
                        points[index_of[id.as_str()]] += 1;
                    }
                    round_stages += 1;
                }
                survivors = vec![index_of[ordering[0].as_str()]];
            }
        }
        stages = round_stages;
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| points[b].cmp(&points[a]).then_with(|| a.cmp(&b)));

    let items: Vec<DocId> = order.iter().map(|&i| docs[i].id.clone()).collect();
    let scores: BTreeMap<DocId, f64> = docs
        .iter()
        .zip(&points)
        .map(|(d, &p)| (d.id.clone(), p as f64))
        .collect();
    Ok(
        RankedList::new(items, format!("tournament(stages={stages},rounds={})", config.rounds_r))
            .with_scores(scores),
    )
}
