//! Boundary construction: oracle agreement for semantic scoring and the
//! completeness guarantee on the asset-valuation fixture.

use proptest::prelude::*;
use skein_core::{Query, ToolId, TraceLog};
use skein_gateway::{cosine, Gateway, MockProvider};
use skein_retrieval::{
    build_boundary, completeness_rerank, semantic_scores, SceneGraph, DEFAULT_ALPHA,
};
use skein_tools::registry::doc_text;
use skein_tools::stubs::StubHost;
use skein_tools::{Endpoint, ToolDoc, ToolManifest, ToolRegistry, ToolSchema};
use std::collections::BTreeMap;
use std::sync::Arc;

fn manifest(id: &str, role: &str, doc: &str) -> ToolManifest {
    ToolManifest {
        tool_id: ToolId::new(id),
        name: id.replace('-', " "),
        semantic_role: role.into(),
        cost: 1.0,
        latency_bounds: (1, 200),
        input_schema: ToolSchema::any(),
        output_schema: ToolSchema::any(),
        endpoint: Endpoint::Builtin("echo".into()),
        documentation: ToolDoc::new(doc),
    }
}

fn gateway() -> Gateway {
    Gateway::new(
        Arc::new(MockProvider::new(vec![]).unwrap()),
        Arc::new(TraceLog::new()),
    )
}

/// Sixteen tools: three collaborating finance tools plus assorted others.
fn finance_registry() -> ToolRegistry {
    let reg = ToolRegistry::new(StubHost::empty(), Arc::new(TraceLog::new()));
    let tools = [
        ("gold-price", "finance", "Quotes the current market price of gold per ounce in dollars."),
        ("stock-quote", "finance", "Quotes the current market price of an equity or stock ticker such as AMZN."),
        ("fx-convert", "finance", "Converts a monetary amount between two currencies at market exchange rates."),
        ("bond-yield", "finance", "Reports treasury bond yields by maturity."),
        ("baidu-ai-search", "search", "Searches the web for pages and news matching a text query."),
        ("arxiv-search", "search", "Searches a scholarly index for research articles matching a query."),
        ("perplexity-search", "search", "Searches the web and returns cited summaries for a query."),
        ("openai-web-search", "search", "Searches the web for documents matching a query."),
        ("city-weather", "weather", "Reports current weather conditions and forecast for a city."),
        ("regional-weather", "weather", "Reports regional weather and precipitation outlook."),
        ("calculator", "compute", "Evaluates arithmetic over two numeric operands."),
        ("programmer", "compute", "Runs small deterministic computations over structured inputs."),
        ("translate-text", "language", "Translates text between natural languages."),
        ("summarize-text", "language", "Summarizes a passage of text."),
        ("map-route", "location", "Computes travel routes between two places."),
        ("place-lookup", "location", "Looks up addresses and points of interest."),
    ];
    for (id, role, doc) in tools {
        reg.register(manifest(id, role, doc)).unwrap();
    }
    reg
}

fn asset_scene_graph() -> SceneGraph {
    SceneGraph {
        query_scene: vec![
            ("q-gold".into(), "asset-valuation".into()),
            ("q-trip".into(), "trip-planning".into()),
        ],
        query_tool: vec![("q-gold".into(), ToolId::new("gold-price"))],
        scene_tool: vec![
            ("asset-valuation".into(), ToolId::new("gold-price")),
            ("asset-valuation".into(), ToolId::new("stock-quote")),
            ("asset-valuation".into(), ToolId::new("fx-convert")),
            ("trip-planning".into(), ToolId::new("city-weather")),
            ("trip-planning".into(), ToolId::new("map-route")),
            ("trip-planning".into(), ToolId::new("place-lookup")),
        ],
    }
}

fn gold_query() -> Query {
    Query::new(
        "q-gold",
        "what is the combined value of 5 ounces of gold and 1 million AMZN stocks in CNY",
    )
}

#[test]
fn semantic_ordering_matches_brute_force_cosine_sort() {
    let reg = finance_registry();
    let gw = gateway();
    let query = gold_query();
    let candidates = reg.all_ids();
    let scores = semantic_scores(&query, &candidates, &reg, &gw).unwrap();
    assert_eq!(scores.len(), 16);

    // Oracle: recompute each cosine directly and sort.
    let qe = gw.embed(&query.contextual_text()).unwrap();
    let mut oracle: Vec<(ToolId, f64)> = candidates
        .iter()
        .map(|id| {
            let te = gw.embed(&doc_text(&reg.manifest(id).unwrap())).unwrap();
            (id.clone(), cosine(&qe, &te).unwrap())
        })
        .collect();
    oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));

    let mut by_impl: Vec<(ToolId, f64)> = scores.clone().into_iter().collect();
    by_impl.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    assert_eq!(
        by_impl.iter().map(|(id, _)| id).collect::<Vec<_>>(),
        oracle.iter().map(|(id, _)| id).collect::<Vec<_>>()
    );
}

#[test]
fn query_matching_tool_description_scores_one() {
    let reg = finance_registry();
    let gw = gateway();
    let text = doc_text(&reg.manifest(&ToolId::new("gold-price")).unwrap());
    let query = Query::new("q", text);
    let scores =
        semantic_scores(&query, &[ToolId::new("gold-price")], &reg, &gw).unwrap();
    assert!((scores[&ToolId::new("gold-price")] - 1.0).abs() < 1e-9);
}

#[test]
fn empty_candidates_empty_scores() {
    let reg = finance_registry();
    let scores = semantic_scores(&gold_query(), &[], &reg, &gateway()).unwrap();
    assert!(scores.is_empty());
}

#[test]
fn collaborating_tools_enter_the_boundary_together() {
    let reg = finance_registry();
    let gw = gateway();
    let graph = asset_scene_graph();
    let query = gold_query();
    let cap = 6;

    let candidates = reg.all_ids();
    let semantic = semantic_scores(&query, &candidates, &reg, &gw).unwrap();

    // The currency converter must rank outside the cap on pure semantics
    // for the completeness guarantee to be observable.
    let mut by_semantic: Vec<(&ToolId, &f64)> = semantic.iter().collect();
    by_semantic.sort_by(|a, b| b.1.partial_cmp(a.1).unwrap());
    let fx_rank = by_semantic
        .iter()
        .position(|(id, _)| **id == ToolId::new("fx-convert"))
        .unwrap();
    assert!(fx_rank >= cap, "fixture broken: fx-convert rank {fx_rank}");

    let boundary = completeness_rerank(&query, &semantic, &graph, DEFAULT_ALPHA, cap).unwrap();
    assert!(boundary.tool_ids.len() <= cap);
    for id in ["gold-price", "stock-quote", "fx-convert"] {
        assert!(
            boundary.contains(&ToolId::new(id)),
            "{id} missing from boundary: {:?}",
            boundary.tool_ids
        );
    }

    // Scores are non-increasing along the ranking.
    let scores: Vec<f64> = boundary
        .tool_ids
        .iter()
        .map(|id| boundary.scores[id])
        .collect();
    for pair in scores.windows(2) {
        assert!(pair[0] >= pair[1]);
    }
}

#[test]
fn alpha_zero_orders_by_pure_semantics() {
    let reg = finance_registry();
    let gw = gateway();
    let query = gold_query();
    let semantic = semantic_scores(&query, &reg.all_ids(), &reg, &gw).unwrap();
    let boundary =
        completeness_rerank(&query, &semantic, &asset_scene_graph(), 0.0, 12).unwrap();

    for pair in boundary.tool_ids.windows(2) {
        assert!(
            semantic[&pair[0]] >= semantic[&pair[1]],
            "{} ranked above {} against semantics",
            pair[0],
            pair[1]
        );
    }
}

#[test]
fn empty_scene_graph_is_pure_semantic_top_cap() {
    let reg = finance_registry();
    let gw = gateway();
    let query = gold_query();
    let semantic = semantic_scores(&query, &reg.all_ids(), &reg, &gw).unwrap();
    let cap = 5;
    let boundary =
        completeness_rerank(&query, &semantic, &SceneGraph::default(), DEFAULT_ALPHA, cap)
            .unwrap();

    let mut oracle: Vec<(ToolId, f64)> = semantic.clone().into_iter().collect();
    oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    let expected: Vec<ToolId> = oracle.into_iter().take(cap).map(|(id, _)| id).collect();
    assert_eq!(boundary.tool_ids, expected);
}

#[test]
fn build_boundary_end_to_end() {
    let reg = finance_registry();
    let boundary = build_boundary(
        &gold_query(),
        &reg,
        &asset_scene_graph(),
        &gateway(),
        DEFAULT_ALPHA,
        6,
    )
    .unwrap();
    assert!(boundary.contains(&ToolId::new("fx-convert")));
    assert!(!boundary.tool_ids.is_empty());
}

proptest! {
    /// Completeness guarantee on randomized inputs: whenever the best
    /// scene's members are all candidates and fit under the cap, they all
    /// appear in the boundary.
    #[test]
    fn best_scene_members_always_survive(
        scores in proptest::collection::vec(-1.0f64..1.0, 8..20),
        scene_a in proptest::collection::btree_set(0usize..20, 1..5),
        scene_b in proptest::collection::btree_set(0usize..20, 1..5),
        alpha in 0.0f64..1.0,
    ) {
        let n = scores.len();
        let semantic: BTreeMap<ToolId, f64> = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| (ToolId::new(format!("t{i:02}")), s))
            .collect();
        let mut scene_tool = Vec::new();
        for &i in scene_a.iter().filter(|&&i| i < n) {
            scene_tool.push(("scene-a".to_string(), ToolId::new(format!("t{i:02}"))));
        }
        for &i in scene_b.iter().filter(|&&i| i < n) {
            scene_tool.push(("scene-b".to_string(), ToolId::new(format!("t{i:02}"))));
        }
        prop_assume!(!scene_tool.is_empty());
        let graph = SceneGraph { query_scene: vec![], query_tool: vec![], scene_tool };

        let cap = 6usize;
        let query = Query::new("q", "randomized");
        let boundary = completeness_rerank(&query, &semantic, &graph, alpha, cap).unwrap();
        prop_assert!(boundary.tool_ids.len() <= cap);

        // Identify the best scene the same way the implementation defines
        // it: highest mean semantic score over all members.
        let scenes = graph.scenes();
        let best = scenes
            .iter()
            .map(|(name, members)| {
                let mean = members
                    .iter()
                    .map(|t| semantic.get(*t).copied().unwrap_or(0.0))
                    .sum::<f64>() / members.len() as f64;
                (*name, mean)
            })
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| b.0.cmp(a.0)))
            .map(|(name, _)| name)
            .unwrap();
        let members: Vec<&ToolId> = scenes[best]
            .iter()
            .filter(|t| semantic.contains_key(**t))
            .copied()
            .collect();
        if members.len() <= cap {
            for m in members {
                prop_assert!(
                    boundary.contains(m),
                    "scene member {m} evicted from {:?}",
                    boundary.tool_ids
                );
            }
        }
    }
}
