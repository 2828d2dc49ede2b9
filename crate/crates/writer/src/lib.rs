//! Final-answer synthesis and the citation pipeline.
//!
//! The writer turns sub-task outputs plus evidence documents into an
//! answer of discrete statements, each a claim with bracketed citation
//! indices. Citations are then policed against a support oracle: a
//! statement is acceptable when its citations jointly support the claim
//! and no citation is dead weight — every one is either individually
//! supporting or necessary to the whole.
//!
//! Correction searches the power set of prompt documents for the smallest
//! supporting subset (sizes up to ten documents; greedy forward selection
//! beyond that), and simplification prunes redundant citations in
//! descending index order. Pruning preserves the joint-support condition
//! unconditionally; minimality additionally holds whenever the oracle is
//! monotone (adding evidence never destroys support), which real
//! entailment checks satisfy.

pub mod citations;
pub mod oracle;
pub mod synthesize;

pub use citations::{correct_citations, simplify_citations, verify_citations, StatementVerdict};
pub use oracle::SupportOracle;
pub use synthesize::{render_answer, synthesize};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One claim with its citation list. Citation values are 1-based document
/// numbers, exactly as they appear in bracketed form ("[1][3]").
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub claim: String,
    pub citations: Vec<usize>,
}

impl Statement {
    pub fn new(claim: impl Into<String>, citations: Vec<usize>) -> Self {
        Self {
            claim: claim.into(),
            citations,
        }
    }
}

/// The writer's final product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationedAnswer {
    pub statements: Vec<Statement>,
    /// Set when the episode ran out of budget and the answer is partial.
    #[serde(default)]
    pub degraded: bool,
}

impl CitationedAnswer {
    pub fn text(&self) -> String {
        self.statements
            .iter()
            .map(|s| s.claim.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Error)]
pub enum WriterError {
    #[error("could not parse writer reply: {0}")]
    ParseError(String),
    #[error("citation index {index} outside 1..={count}")]
    CitationOutOfRange { index: usize, count: usize },
    #[error("statement has no citations but {0} documents were provided")]
    MissingCitations(usize),
    #[error("no document subset supports the claim {0:?}")]
    Unsupportable(String),
    #[error("support oracle has no entry for the queried (citations, claim) pair")]
    OracleIncomplete,
    #[error("gateway error: {0}")]
    Gateway(#[from] skein_gateway::GatewayError),
}
