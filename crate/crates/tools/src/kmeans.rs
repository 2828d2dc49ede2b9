//! Seeded k-means++ with Lloyd refinement.
//!
//! Seeding follows the weighted D² scheme: the first centroid is drawn
//! uniformly, each subsequent one with probability proportional to its
//! squared distance from the nearest chosen centroid. With a fixed seed the
//! whole run is deterministic. When every remaining point coincides with a
//! centroid (total weight zero) the lowest-index unchosen point is taken.
//! Assignment ties break toward the lowest centroid index.
//!
//! Lloyd iterations run to an assignment fixpoint or `max_iters`. The
//! per-iteration objective (sum of squared distances after assignment) is
//! recorded so callers can check the monotone-descent property.

use crate::ToolError;
use skein_core::parallel::par_map;
use skein_core::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansOutcome {
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Objective after each assignment step, non-increasing.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Partitions `points` into `k` clusters. `threads` bounds the parallelism
/// of the assignment step; results are identical for any thread count.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iters: usize,
    threads: usize,
) -> Result<KmeansOutcome, ToolError> {
    if k == 0 || k > points.len() {
        return Err(ToolError::KOutOfRange {
            k,
            max: points.len(),
        });
    }

    let mut centroids = seed_centroids(points, k, seed);
    let mut assignments = vec![usize::MAX; points.len()];
    let mut objective_trace = Vec::new();
    let mut iterations = 0;

    // Coarse slabs keep the parallel dispatch overhead negligible.
    let slab = points.len().div_ceil(threads.max(1) * 4).max(1);
    let slabs: Vec<&[Vec<f64>]> = points.chunks(slab).collect();

    loop {
        // Assignment step: nearest centroid, ties to the lowest index.
        let per_slab: Vec<Vec<(usize, f64)>> = par_map(threads, &slabs, |chunk| {
            chunk
                .iter()
                .map(|p| {
                    let mut best = (0usize, f64::INFINITY);
                    for (ci, c) in centroids.iter().enumerate() {
                        let d = dist2(p, c);
                        if d < best.1 {
                            best = (ci, d);
                        }
                    }
                    best
                })
                .collect()
        });
        let per_point: Vec<(usize, f64)> = per_slab.into_iter().flatten().collect();
        let next: Vec<usize> = per_point.iter().map(|(ci, _)| *ci).collect();
        // Sequential sum keeps the trace bit-identical across thread counts.
        let objective: f64 = per_point.iter().map(|(_, d)| *d).sum();
        objective_trace.push(objective);

        let converged = next == assignments;
        assignments = next;
        iterations += 1;
        if converged || iterations >= max_iters {
            break;
        }

        // Update step: mean of each cluster; empty clusters keep their
        // previous centroid.
        let dim = points[0].len();
        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for (ci, (sum, &count)) in sums.iter().zip(&counts).enumerate() {
            if count > 0 {
                centroids[ci] = sum.iter().map(|s| s / count as f64).collect();
            }
        }
    }

    Ok(KmeansOutcome {
        assignments,
        centroids,
        objective_trace,
        iterations,
    })
}

fn seed_centroids(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SplitMix64::new(seed);
    let mut chosen_idx = vec![rng.next_below(points.len())];

    while chosen_idx.len() < k {
        let weights: Vec<f64> = points
            .iter()
            .map(|p| {
                chosen_idx
                    .iter()
                    .map(|&ci| dist2(p, &points[ci]))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let next = if total <= 0.0 {
            // All points coincide with centroids; take the lowest-index
            // point not already chosen.
            (0..points.len())
                .find(|i| !chosen_idx.contains(i))
                .unwrap_or(0)
        } else {
            let target = rng.next_f64() * total;
            let mut cum = 0.0;
            let mut pick = points.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                cum += w;
                if cum > target {
                    pick = i;
                    break;
                }
            }
            pick
        };
        chosen_idx.push(next);
    }

    chosen_idx.into_iter().map(|i| points[i].clone()).collect()
}
