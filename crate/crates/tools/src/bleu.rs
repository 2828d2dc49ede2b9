//! BLEU-4 with uniform weights, add-one smoothing on the higher-order
//! n-grams, and the standard brevity penalty. Used by the documentation
//! refinement loop's termination score.

use crate::ToolError;
use std::collections::HashMap;

/// Sentence-level BLEU-4 of `candidate` against `reference`, in [0, 1].
/// Identical strings score exactly 1; zero unigram overlap scores 0.
pub fn bleu(candidate: &str, reference: &str) -> Result<f64, ToolError> {
    let cand: Vec<&str> = candidate.split_whitespace().collect();
    let refr: Vec<&str> = reference.split_whitespace().collect();
    if cand.is_empty() || refr.is_empty() {
        return Err(ToolError::EmptyInput);
    }

    let mut log_sum = 0.0f64;
    for n in 1..=4usize {
        let (matches, total) = clipped_matches(&cand, &refr, n);
        let precision = if n == 1 {
            if total == 0 {
                return Err(ToolError::EmptyInput);
            }
            matches as f64 / total as f64
        } else {
            // Add-one smoothing keeps short documents from zeroing out.
            (matches + 1) as f64 / (total + 1) as f64
        };
        if precision == 0.0 {
            return Ok(0.0);
        }
        log_sum += 0.25 * precision.ln();
    }

    let bp = if cand.len() >= refr.len() {
        1.0
    } else {
        (1.0 - refr.len() as f64 / cand.len() as f64).exp()
    };
    Ok(bp * log_sum.exp())
}

/// Clipped n-gram matches and the candidate n-gram count.
fn clipped_matches(cand: &[&str], refr: &[&str], n: usize) -> (usize, usize) {
    if cand.len() < n {
        return (0, 0);
    }
    let mut ref_counts: HashMap<&[&str], usize> = HashMap::new();
    if refr.len() >= n {
        for gram in refr.windows(n) {
            *ref_counts.entry(gram).or_insert(0) += 1;
        }
    }
    let mut matches = 0usize;
    let mut cand_counts: HashMap<&[&str], usize> = HashMap::new();
    for gram in cand.windows(n) {
        *cand_counts.entry(gram).or_insert(0) += 1;
    }
    for (gram, count) in cand_counts {
        let clip = ref_counts.get(gram).copied().unwrap_or(0);
        matches += count.min(clip);
    }
    (matches, cand.len() - n + 1)
}
