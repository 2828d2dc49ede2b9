//! The judgment unit behind every ranking algorithm: score one document,
//! compare a pair, or order a window.

use crate::RankingError;
use skein_core::{DocId, Document, Query};
use skein_gateway::Gateway;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

/// Restriction on which call shapes a comparator supports. `None` (the
/// oracle default) supports all three.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Pointwise,
    Pairwise,
    /// Listwise with a window bound the caller should respect.
    Listwise { window: usize },
}

pub enum ComparatorKind {
    /// Ground-truth relevance per document id; must cover every document
    /// it is asked about.
    MockOracle(BTreeMap<DocId, f64>),
    /// Model-backed judgments routed through the gateway under a tag.
    ModelBacked { tag: String, gateway: Gateway },
}

/// A relevance judge with per-arity call counters (used by tests that
/// assert call complexity, e.g. window-pass counts).
pub struct Comparator {
    kind: ComparatorKind,
    arity: Option<Arity>,
    pointwise_calls: AtomicU64,
    pairwise_calls: AtomicU64,
    listwise_calls: AtomicU64,
}

impl Comparator {
    /// Oracle comparator capable of all three call shapes.
    pub fn oracle(relevance: BTreeMap<DocId, f64>) -> Self {
        Self {
            kind: ComparatorKind::MockOracle(relevance),
            arity: None,
            pointwise_calls: AtomicU64::new(0),
            pairwise_calls: AtomicU64::new(0),
            listwise_calls: AtomicU64::new(0),
        }
    }

    /// Model-backed comparator restricted to one call shape.
    pub fn model(tag: impl Into<String>, gateway: Gateway, arity: Arity) -> Self {
        Self {
            kind: ComparatorKind::ModelBacked {
                tag: tag.into(),
                gateway,
            },
            arity: Some(arity),
            pointwise_calls: AtomicU64::new(0),
            pairwise_calls: AtomicU64::new(0),
            listwise_calls: AtomicU64::new(0),
        }
    }

    /// (pointwise, pairwise, listwise) call counts so far.
    pub fn calls(&self) -> (u64, u64, u64) {
        (
            self.pointwise_calls.load(AtomicOrdering::SeqCst),
            self.pairwise_calls.load(AtomicOrdering::SeqCst),
            self.listwise_calls.load(AtomicOrdering::SeqCst),
        )
    }

    fn ensure(&self, wanted: &'static str, ok: bool) -> Result<(), RankingError> {
        if ok {
            Ok(())
        } else {
            Err(RankingError::ArityMismatch(wanted))
        }
    }

    fn relevance<'a>(
        map: &'a BTreeMap<DocId, f64>,
        doc: &Document,
    ) -> Result<&'a f64, RankingError> {
        map.get(&doc.id)
            .ok_or_else(|| RankingError::MissingRelevance(doc.id.clone()))
    }

    /// Relevance score of one document for the query.
    pub fn score(&self, query: &Query, doc: &Document) -> Result<f64, RankingError> {
        self.ensure(
            "pointwise",
            matches!(self.arity, None | Some(Arity::Pointwise)),
        )?;
        self.pointwise_calls.fetch_add(1, AtomicOrdering::SeqCst);
        match &self.kind {
            ComparatorKind::MockOracle(map) => Ok(*Self::relevance(map, doc)?),
            ComparatorKind::ModelBacked { tag, gateway } => {
                let reply = gateway.ask(
                    tag,
                    format!(
                        "Query: {}\nDocument: {}\n{}\nIs this document relevant? Answer yes or no.",
                        query.text, doc.title, doc.content
                    ),
                )?;
                let logprobs = reply
                    .token_logprobs
                    .ok_or(RankingError::MissingLogprobs)?;
                // Likelihood of the "yes" token; absent means certainty of
                // irrelevance.
                let score = logprobs
                    .iter()
                    .find(|(token, _)| token.trim().eq_ignore_ascii_case("yes"))
                    .map(|(_, lp)| lp.exp())
                    .unwrap_or(0.0);
                Ok(score)
            }
        }
    }

    /// Which of two documents serves the query better.
    pub fn prefer(
        &self,
        query: &Query,
        a: &Document,
        b: &Document,
    ) -> Result<Ordering, RankingError> {
        self.ensure(
            "pairwise",
            matches!(self.arity, None | Some(Arity::Pairwise)),
        )?;
        self.pairwise_calls.fetch_add(1, AtomicOrdering::SeqCst);
        match &self.kind {
            ComparatorKind::MockOracle(map) => {
                let ra = *Self::relevance(map, a)?;
                let rb = *Self::relevance(map, b)?;
                Ok(ra.partial_cmp(&rb).unwrap_or(Ordering::Equal))
            }
            ComparatorKind::ModelBacked { tag, gateway } => {
                let reply = gateway.ask(
                    tag,
                    format!(
                        "Query: {}\nDocument A: {}\n{}\nDocument B: {}\n{}\nWhich document answers the query better? Reply A or B.",
                        query.text, a.title, a.content, b.title, b.content
                    ),
                )?;
                match reply.text.trim().to_ascii_uppercase().chars().next() {
                    Some('A') => Ok(Ordering::Greater),
                    Some('B') => Ok(Ordering::Less),
                    _ => Err(RankingError::UnparseableReply(reply.text)),
                }
            }
        }
    }

    /// Orders a window of documents, best first.
    pub fn order(&self, query: &Query, docs: &[&Document]) -> Result<Vec<DocId>, RankingError> {
        self.ensure(
            "listwise",
            matches!(self.arity, None | Some(Arity::Listwise { .. })),
        )?;
        self.listwise_calls.fetch_add(1, AtomicOrdering::SeqCst);
        match &self.kind {
            ComparatorKind::MockOracle(map) => {
                let mut indexed: Vec<(usize, &&Document)> = docs.iter().enumerate().collect();
                for (_, d) in &indexed {
                    Self::relevance(map, d)?;
                }
                indexed.sort_by(|(ia, a), (ib, b)| {
                    let ra = map[&a.id];
                    let rb = map[&b.id];
                    rb.partial_cmp(&ra)
                        .unwrap_or(Ordering::Equal)
                        .then_with(|| ia.cmp(ib))
                });
                Ok(indexed.into_iter().map(|(_, d)| d.id.clone()).collect())
            }
            ComparatorKind::ModelBacked { tag, gateway } => {
                let mut prompt = format!("Query: {}\nRank these documents best first.\n", query.text);
                for (i, d) in docs.iter().enumerate() {
                    prompt.push_str(&format!("[{}] {}\n{}\n", i + 1, d.title, d.content));
                }
                prompt.push_str("Reply with the ordering, e.g. [2] > [1] > [3].");
                let reply = gateway.ask(tag, prompt)?;
                parse_permutation(&reply.text, docs)
            }
        }
    }
}

/// Parses a "[2] > [1] > [3]" style reply into document ids. Repeated
/// mentions keep their first position; unmentioned documents append in
/// input order.
fn parse_permutation(text: &str, docs: &[&Document]) -> Result<Vec<DocId>, RankingError> {
    let mut order: Vec<usize> = Vec::new();
    let mut number = String::new();
    for c in text.chars().chain(std::iter::once(' ')) {
        if c.is_ascii_digit() {
            number.push(c);
        } else if !number.is_empty() {
            let n: usize = number.parse().map_err(|_| {
                RankingError::UnparseableReply(text.to_string())
            })?;
            number.clear();
            if n >= 1 && n <= docs.len() && !order.contains(&(n - 1)) {
                order.push(n - 1);
            }
        }
    }
    if order.is_empty() {
        return Err(RankingError::UnparseableReply(text.to_string()));
    }
    for i in 0..docs.len() {
        if !order.contains(&i) {
            order.push(i);
        }
    }
    Ok(order.into_iter().map(|i| docs[i].id.clone()).collect())
}
