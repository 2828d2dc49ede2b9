//! Query-oriented tool retrieval.
//!
//! Produces the dynamic capability boundary: the small, query-specific
//! subset of tools the planner may bind sub-tasks to. Semantic scoring
//! compares the query embedding (context included) against tool
//! documentation embeddings; the completeness re-rank then blends in a
//! scene bonus so that tools that must collaborate on one task are
//! co-retrieved even when some of them rank low on pure similarity.

use serde::{Deserialize, Serialize};
use skein_core::trace::epoch_ms;
use skein_core::{Query, ToolId};
use skein_gateway::{cosine, Gateway};
use skein_tools::registry::doc_text;
use skein_tools::ToolRegistry;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Default size cap of the capability boundary.
pub const DEFAULT_BOUNDARY_CAP: usize = 12;
/// Default blend weight of the scene bonus.
pub const DEFAULT_ALPHA: f64 = 0.3;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("unknown tool {0}")]
    UnknownTool(ToolId),
    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("scene graph malformed: {0}")]
    SceneGraph(String),
    #[error("gateway error: {0}")]
    Gateway(#[from] skein_gateway::GatewayError),
    #[error("tool error: {0}")]
    Tool(#[from] skein_tools::ToolError),
}

/// Three bipartite edge sets over query ids, scene ids, and tool ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneGraph {
    #[serde(default)]
    pub query_scene: Vec<(String, String)>,
    #[serde(default)]
    pub query_tool: Vec<(String, ToolId)>,
    #[serde(default)]
    pub scene_tool: Vec<(String, ToolId)>,
}

impl SceneGraph {
    pub fn from_json(text: &str) -> Result<Self, RetrievalError> {
        let graph: SceneGraph =
            serde_json::from_str(text).map_err(|e| RetrievalError::SceneGraph(e.to_string()))?;
        graph.validate()?;
        Ok(graph)
    }

    /// Every scene must own at least one tool; scene references in
    /// query_scene must exist.
    pub fn validate(&self) -> Result<(), RetrievalError> {
        let scenes_with_tools: BTreeSet<&str> =
            self.scene_tool.iter().map(|(s, _)| s.as_str()).collect();
        for (_, scene) in &self.query_scene {
            if !scenes_with_tools.contains(scene.as_str()) {
                return Err(RetrievalError::SceneGraph(format!(
                    "scene {scene:?} has no member tools"
                )));
            }
        }
        Ok(())
    }

    /// Scene id -> member tool ids.
    pub fn scenes(&self) -> BTreeMap<&str, BTreeSet<&ToolId>> {
        let mut out: BTreeMap<&str, BTreeSet<&ToolId>> = BTreeMap::new();
        for (scene, tool) in &self.scene_tool {
            out.entry(scene.as_str()).or_default().insert(tool);
        }
        out
    }
}

/// The planner's tool horizon for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapabilityBoundary {
    /// Tool ids in descending score order, at most `cap` of them.
    pub tool_ids: Vec<ToolId>,
    pub scores: BTreeMap<ToolId, f64>,
    pub built_at: u64,
}

impl CapabilityBoundary {
    pub fn empty() -> Self {
        Self {
            tool_ids: Vec::new(),
            scores: BTreeMap::new(),
            built_at: epoch_ms(),
        }
    }

    pub fn contains(&self, id: &ToolId) -> bool {
        self.scores.contains_key(id)
    }

    pub fn top(&self) -> Option<&ToolId> {
        self.tool_ids.first()
    }
}

/// Cosine similarity between the contextual query embedding and each
/// candidate tool's documentation embedding.
pub fn semantic_scores(
    query: &Query,
    candidates: &[ToolId],
    registry: &ToolRegistry,
    gateway: &Gateway,
) -> Result<BTreeMap<ToolId, f64>, RetrievalError> {
    if candidates.is_empty() {
        return Ok(BTreeMap::new());
    }
    let query_embedding = gateway.embed(&query.contextual_text())?;
    let mut scores = BTreeMap::new();
    for id in candidates {
        let manifest = registry
            .manifest(id)
            .map_err(|_| RetrievalError::UnknownTool(id.clone()))?;
        let tool_embedding = gateway.embed(&doc_text(&manifest))?;
        scores.insert(id.clone(), cosine(&query_embedding, &tool_embedding)?);
    }
    Ok(scores)
}

/// Blends semantic scores with a scene bonus and applies the completeness
/// guarantee: every candidate member of the single best scene enters the
/// boundary, evicting the lowest-scoring non-scene tools when over cap.
///
/// The scene bonus of a tool is the best mean semantic score over the
/// scenes containing it; scene members outside the candidate set count as
/// zero toward their scene's mean.
pub fn completeness_rerank(
    query: &Query,
    semantic: &BTreeMap<ToolId, f64>,
    graph: &SceneGraph,
    alpha: f64,
    cap: usize,
) -> Result<CapabilityBoundary, RetrievalError> {
    let _ = query; // scoring is fully determined by the inputs below
    if !(0.0..=1.0).contains(&alpha) {
        return Err(RetrievalError::AlphaOutOfRange(alpha));
    }

    let scenes = graph.scenes();
    let scene_means: BTreeMap<&str, f64> = scenes
        .iter()
        .map(|(scene, members)| {
            let total: f64 = members
                .iter()
                .map(|t| semantic.get(*t).copied().unwrap_or(0.0))
                .sum();
            (*scene, total / members.len() as f64)
        })
        .collect();

    let scene_bonus = |tool: &ToolId| -> f64 {
        scenes
            .iter()
            .filter(|(_, members)| members.contains(tool))
            .map(|(scene, _)| scene_means[scene])
            .fold(f64::NEG_INFINITY, f64::max)
    };

    let mut finals: Vec<(ToolId, f64)> = semantic
        .iter()
        .map(|(id, &sem)| {
            let bonus = scene_bonus(id);
            let score = if bonus.is_finite() {
                (1.0 - alpha) * sem + alpha * bonus
            } else {
                (1.0 - alpha) * sem
            };
            (id.clone(), score)
        })
        .collect();
    finals.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });

    // Best scene by mean semantic score, ties to the lexicographically
    // first id. Only scenes with at least one candidate member count.
    let best_scene: Option<&str> = scene_means
        .iter()
        .filter(|(scene, _)| {
            scenes[*scene].iter().any(|t| semantic.contains_key(*t))
        })
        .max_by(|a, b| {
            a.1.partial_cmp(b.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| b.0.cmp(a.0))
        })
        .map(|(scene, _)| *scene);

    let must_include: BTreeSet<ToolId> = best_scene
        .map(|scene| {
            scenes[scene]
                .iter()
                .filter(|t| semantic.contains_key(**t))
                .map(|t| (*t).clone())
                .collect()
        })
        .unwrap_or_default();

    let mut selected: Vec<(ToolId, f64)> = Vec::new();
    // Scene members first (by score), then the rest, then truncate.
    for (id, score) in &finals {
        if must_include.contains(id) {
            selected.push((id.clone(), *score));
        }
    }
    selected.truncate(cap);
    for (id, score) in &finals {
        if selected.len() >= cap {
            break;
        }
        if !must_include.contains(id) {
            selected.push((id.clone(), *score));
        }
    }
    selected.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });

    Ok(CapabilityBoundary {
        tool_ids: selected.iter().map(|(id, _)| id.clone()).collect(),
        scores: selected.into_iter().collect(),
        built_at: epoch_ms(),
    })
}

/// Builds the boundary for a query over the whole registry.
pub fn build_boundary(
    query: &Query,
    registry: &ToolRegistry,
    graph: &SceneGraph,
    gateway: &Gateway,
    alpha: f64,
    cap: usize,
) -> Result<CapabilityBoundary, RetrievalError> {
    let candidates = registry.all_ids();
    let semantic = semantic_scores(query, &candidates, registry, gateway)?;
    completeness_rerank(query, &semantic, graph, alpha, cap)
}

/// Contrastive loss of one positive similarity against a set of negatives:
/// -log(e^pos / (e^pos + sum(e^neg))). Computed in log-sum-exp form.
pub fn infonce_loss(sim_pos: f64, sim_negs: &[f64]) -> Result<f64, RetrievalError> {
    if sim_negs.is_empty() {
        return Err(RetrievalError::SceneGraph(
            "infonce requires at least one negative".into(),
        ));
    }
    let max = sim_negs
        .iter()
        .fold(sim_pos, |acc, &v| acc.max(v));
    let denom: f64 = std::iter::once(sim_pos)
        .chain(sim_negs.iter().copied())
        .map(|v| (v - max).exp())
        .sum();
    Ok(-(sim_pos - max - denom.ln()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infonce_symmetric_case_is_ln_two() {
        let loss = infonce_loss(0.0, &[0.0]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn infonce_uniform_case_is_ln_k_plus_one() {
        let loss = infonce_loss(0.0, &[0.0, 0.0, 0.0]).unwrap();
        assert!((loss - 4.0f64.ln()).abs() < 1e-6);
        assert!((loss - 1.3863).abs() < 1e-4);
    }

    #[test]
    fn infonce_strong_positive_approaches_zero() {
        let loss = infonce_loss(5.0, &[0.0, 0.0]).unwrap();
        assert!((loss - 0.0134).abs() < 1e-4, "got {loss}");
    }

    #[test]
    fn infonce_requires_negatives() {
        assert!(infonce_loss(1.0, &[]).is_err());
    }

    #[test]
    fn infonce_monotone_in_arguments() {
        let base = infonce_loss(1.0, &[0.5, 0.2]).unwrap();
        // Strictly decreasing as the positive grows.
        assert!(infonce_loss(1.5, &[0.5, 0.2]).unwrap() < base);
        // Strictly increasing in any negative.
        assert!(infonce_loss(1.0, &[0.9, 0.2]).unwrap() > base);
        assert!(infonce_loss(1.0, &[0.5, 0.6]).unwrap() > base);
    }

    #[test]
    fn scene_graph_validation_rejects_empty_scene() {
        let graph = SceneGraph {
            query_scene: vec![("q1".into(), "ghost".into())],
            query_tool: vec![],
            scene_tool: vec![],
        };
        assert!(graph.validate().is_err());
    }
}
