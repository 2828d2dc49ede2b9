//! Re-action directives issued while monitoring an episode.

use crate::VertexId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Decision taken after assessing a layer of execution results.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Directive {
    /// Results suffice so far; proceed to the next layer.
    Continue,
    /// All work complete; hand off to the writer.
    Finalize,
    /// Replace the named subgraph (a failed vertex plus its descendants)
    /// with a freshly planned one, preserving everything else.
    ReplanSubgraph {
        vertices: BTreeSet<VertexId>,
        reason: String,
    },
    /// Results are incomplete; append downstream sub-tasks.
    AugmentDag { reason: String },
}

impl Directive {
    pub fn kind(&self) -> &'static str {
        match self {
            Directive::Continue => "continue",
            Directive::Finalize => "finalize",
            Directive::ReplanSubgraph { .. } => "replan-subgraph",
            Directive::AugmentDag { .. } => "augment-dag",
        }
    }
}
