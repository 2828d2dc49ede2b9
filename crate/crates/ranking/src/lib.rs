//! Ranking laboratory.
//!
//! One comparator abstraction (a numeric oracle for tests, a model-backed
//! judge in production) drives every algorithm here: pointwise scoring,
//! all-pairs and sort-based pairwise ranking, listwise sliding windows,
//! tournament ranking with a points system, pair generation and the
//! pairwise distillation loss, rank-quality metrics, and deterministic
//! metadata-policy orderings.

pub mod comparator;
pub mod metrics;
pub mod pairwise;
pub mod pointwise;
pub mod policy;
pub mod ranknet;
pub mod sliding;
pub mod tournament;

pub use comparator::{Arity, Comparator, ComparatorKind};
pub use metrics::ndcg;
pub use pairwise::{pairwise_rank, PairwiseStrategy};
pub use pointwise::pointwise_scores;
pub use policy::{apply_metadata_policy, FeatureKey, RankPolicy};
pub use ranknet::{ranknet_loss, ranknet_pairs};
pub use sliding::sliding_window_rank;
pub use tournament::{tournament_rank, TournamentConfig};

use skein_core::DocId;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("comparator does not support {0} calls")]
    ArityMismatch(&'static str),
    #[error("document {0} missing from the oracle relevance map")]
    MissingRelevance(DocId),
    #[error("model response carried no token log-probabilities")]
    MissingLogprobs,
    #[error("could not parse model ranking reply: {0}")]
    UnparseableReply(String),
    #[error("duplicate document {0} in ranking input")]
    DuplicateDoc(DocId),
    #[error("need at least {need} documents, got {got}")]
    TooFewDocs { need: usize, got: usize },
    #[error("window parameters invalid: w={w}, s={s}")]
    BadWindow { w: usize, s: usize },
    #[error("tournament config invalid: group_size={group_size}, advance_n={advance_n}, rounds={rounds}")]
    BadTournament {
        group_size: usize,
        advance_n: usize,
        rounds: usize,
    },
    #[error("teacher ranks and student scores cover different documents")]
    IdMismatch,
    #[error("k must be positive")]
    BadK,
    #[error("gains must be non-negative, got {0}")]
    NegativeGain(f64),
    #[error("gateway error: {0}")]
    Gateway(#[from] skein_gateway::GatewayError),
}
