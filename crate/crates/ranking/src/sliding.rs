//! Listwise re-ranking with a backward sliding window.
//!
//! Windows of `w` documents are re-ordered by one listwise call each,
//! starting at the bottom of the current ranking and sliding toward the
//! front by `s`, the final window clamped to start at position 0. For
//! M > w that is ceil((M - w) / s) + 1 passes; a window at least as large
//! as the list degenerates to a single full sort.

use crate::{Comparator, RankingError};
use skein_core::{Document, Query, RankedList};
use std::collections::BTreeMap;

/// Number of window passes for a list of `m` documents.
pub fn window_passes(m: usize, w: usize, s: usize) -> usize {
    if m == 0 {
        return 0;
    }
    if w >= m {
        return 1;
    }
    (m - w).div_ceil(s) + 1
}

/// Re-ranks `docs` (given in their initial ranking order).
pub fn sliding_window_rank(
    query: &Query,
    docs: &[Document],
    w: usize,
    s: usize,
    comparator: &Comparator,
) -> Result<RankedList, RankingError> {
    if w == 0 || s == 0 || s > w {
        return Err(RankingError::BadWindow { w, s });
    }
    let m = docs.len();
    let method = format!("sliding-window(w={w},s={s})");
    if m == 0 {
        return Ok(RankedList::new(Vec::new(), method));
    }

    let by_id: BTreeMap<&str, &Document> =
        docs.iter().map(|d| (d.id.as_str(), d)).collect();
    let mut working: Vec<&Document> = docs.iter().collect();

    if w >= m {
        let order = comparator.order(query, &working)?;
        return Ok(RankedList::new(order, method));
    }

    let mut start = m - w;
    loop {
        let window: Vec<&Document> = working[start..start + w].to_vec();
        let reordered = comparator.order(query, &window)?;
        for (offset, id) in reordered.iter().enumerate() {
            working[start + offset] = by_id[id.as_str()];
        }
        if start == 0 {
            break;
        }
        start = start.saturating_sub(s);
    }

    Ok(RankedList::new(
        working.into_iter().map(|d| d.id.clone()).collect(),
        method,
    ))
}
