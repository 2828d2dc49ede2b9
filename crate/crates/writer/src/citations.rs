//! Citation verification, correction, and simplification.

use crate::{CitationedAnswer, Statement, SupportOracle, WriterError};
use serde::{Deserialize, Serialize};
use skein_core::Document;
use std::collections::BTreeSet;

/// Bound above which the power-set search falls back to greedy forward
/// selection.
pub const POWER_SET_DOC_LIMIT: usize = 10;

/// Verdict for one statement: joint support plus the per-citation
/// no-dead-weight condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementVerdict {
    /// The concatenated citations support the claim.
    pub jointly_supported: bool,
    /// Every citation is individually supporting or necessary.
    pub citations_minimal: bool,
    /// Citations that are neither individually supporting nor necessary.
    pub redundant_citations: Vec<usize>,
}

impl StatementVerdict {
    pub fn passes(&self) -> bool {
        self.jointly_supported && self.citations_minimal
    }
}

fn citation_set(statement: &Statement) -> BTreeSet<usize> {
    statement.citations.iter().copied().collect()
}

/// Checks each statement of an answer:
/// (a) the union of its citations supports the claim, and
/// (b) for every citation t: t alone supports the claim, or removing t
///     breaks the joint support.
pub fn verify_citations(
    answer: &CitationedAnswer,
    documents: &[Document],
    oracle: &SupportOracle,
) -> Result<Vec<StatementVerdict>, WriterError> {
    answer
        .statements
        .iter()
        .map(|s| verify_statement(s, documents, oracle))
        .collect()
}

pub fn verify_statement(
    statement: &Statement,
    documents: &[Document],
    oracle: &SupportOracle,
) -> Result<StatementVerdict, WriterError> {
    let all = citation_set(statement);
    let jointly_supported = oracle.supports(&all, &statement.claim, documents)?;

    let mut redundant = Vec::new();
    for &t in &all {
        let alone: BTreeSet<usize> = [t].into();
        if oracle.supports(&alone, &statement.claim, documents)? {
            continue;
        }
        let mut without = all.clone();
        without.remove(&t);
        if !oracle.supports(&without, &statement.claim, documents)? {
            continue; // necessary
        }
        redundant.push(t);
    }

    Ok(StatementVerdict {
        jointly_supported,
        citations_minimal: redundant.is_empty(),
        redundant_citations: redundant,
    })
}

/// Replaces a statement's citations with the smallest supporting subset of
/// the prompt documents, ties broken lexicographically by index list.
/// Empty subsets never win: a claim that needs no evidence still cites its
/// smallest nonempty supporting subset, and a claim no subset supports is
/// an error.
///
/// Up to [`POWER_SET_DOC_LIMIT`] documents this walks the power set in
/// (size, lexicographic) order, so the result is minimal by construction;
/// beyond the limit it falls back to greedy forward selection in index
/// order followed by a simplification pass.
pub fn correct_citations(
    statement: &Statement,
    documents: &[Document],
    oracle: &SupportOracle,
) -> Result<Statement, WriterError> {
    let n = documents.len();
    if n <= POWER_SET_DOC_LIMIT {
        for subset in subsets_by_size_then_lex(n) {
            if oracle.supports(&subset, &statement.claim, documents)? {
                return Ok(Statement::new(
                    statement.claim.clone(),
                    subset.into_iter().collect(),
                ));
            }
        }
        return Err(WriterError::Unsupportable(statement.claim.clone()));
    }

    // Greedy forward selection: grow in index order until supported.
    let mut chosen = BTreeSet::new();
    for idx in 1..=n {
        chosen.insert(idx);
        if oracle.supports(&chosen, &statement.claim, documents)? {
            let grown = Statement::new(statement.claim.clone(), chosen.into_iter().collect());
            return simplify_citations(&grown, documents, oracle);
        }
    }
    Err(WriterError::Unsupportable(statement.claim.clone()))
}

/// Nonempty subsets of 1..=n ordered by (size, lexicographic index list).
fn subsets_by_size_then_lex(n: usize) -> impl Iterator<Item = BTreeSet<usize>> {
    (1..=n).flat_map(move |size| combinations(n, size))
}

fn combinations(n: usize, size: usize) -> Vec<BTreeSet<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn recurse(
        start: usize,
        n: usize,
        size: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<BTreeSet<usize>>,
    ) {
        if current.len() == size {
            out.push(current.iter().copied().collect());
            return;
        }
        for next in start..=n {
            if n - next + 1 < size - current.len() {
                break;
            }
            current.push(next);
            recurse(next + 1, n, size, current, out);
            current.pop();
        }
    }
    recurse(1, n, size, &mut current, &mut out);
    out
}

/// Prunes redundant citations greedily in descending index order: a
/// citation is dropped whenever the remaining set still supports the
/// claim. Requires the statement to pass the joint-support condition.
pub fn simplify_citations(
    statement: &Statement,
    documents: &[Document],
    oracle: &SupportOracle,
) -> Result<Statement, WriterError> {
    let mut kept = citation_set(statement);
    let ordered_desc: Vec<usize> = kept.iter().rev().copied().collect();
    for t in ordered_desc {
        let mut without = kept.clone();
        without.remove(&t);
        if !without.is_empty() && oracle.supports(&without, &statement.claim, documents)? {
            kept = without;
        }
    }
    Ok(Statement::new(
        statement.claim.clone(),
        kept.into_iter().collect(),
    ))
}
