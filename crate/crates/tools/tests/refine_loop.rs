//! Refinement loop against the shipped three-iteration fixture script:
//! the loop must stop at the first iteration whose termination score
//! clears tau, the diversity gate must reject the scripted duplicate, and
//! the reported deltas must match the component oracles.

use skein_core::{ToolId, TraceLog};
use skein_gateway::{cosine, Gateway, MockProvider};
use skein_tools::refine::refine_documentation;
use skein_tools::stubs::StubHost;
use skein_tools::{
    bleu, Endpoint, RefineOptions, SchemaKind, ToolDoc, ToolManifest, ToolRegistry, ToolSchema,
};
use std::sync::Arc;

fn fixture_path() -> String {
    format!(
        "{}/../../fixtures/gateway/refine.jsonl",
        env!("CARGO_MANIFEST_DIR")
    )
}

fn weather_manifest() -> ToolManifest {
    ToolManifest {
        tool_id: ToolId::new("city-weather"),
        name: "city weather".into(),
        semantic_role: "weather".into(),
        cost: 1.0,
        latency_bounds: (1, 500),
        input_schema: ToolSchema::object([("city", SchemaKind::String, true)]),
        output_schema: ToolSchema::any(),
        endpoint: Endpoint::Builtin("weather".into()),
        documentation: ToolDoc::new("Gets weather."),
    }
}

fn setup() -> (ToolRegistry, Gateway) {
    let registry = ToolRegistry::new(StubHost::empty(), Arc::new(TraceLog::new()));
    registry.register(weather_manifest()).unwrap();
    let provider = MockProvider::from_files(&[fixture_path()]).unwrap();
    let gateway = Gateway::new(Arc::new(provider), Arc::new(TraceLog::new()));
    (registry, gateway)
}

#[test]
fn scripted_loop_converges_at_iteration_three() {
    let (registry, gateway) = setup();
    let tool = ToolId::new("city-weather");
    let options = RefineOptions {
        max_iters: 8,
        phi: 0.9,
        tau: 0.9,
    };
    let outcome = refine_documentation(&registry, &tool, options, &gateway).unwrap();

    assert!(outcome.converged, "errors: {:?}", outcome.errors);
    assert_eq!(outcome.iterations_run, 3);
    assert_eq!(outcome.doc.revision, 3, "three accepted rewrites");
    assert_eq!(outcome.doc.history.len(), 3);
    assert_eq!(outcome.deltas.len(), 3);
    assert!(outcome.deltas[0] <= 0.9, "delta 1 = {}", outcome.deltas[0]);
    assert!(outcome.deltas[1] <= 0.9, "delta 2 = {}", outcome.deltas[1]);
    assert!(outcome.deltas[2] > 0.9, "delta 3 = {}", outcome.deltas[2]);

    // The duplicate exploration query was rejected by the gate and kept in
    // the history.
    let rejected: Vec<_> = outcome.records.iter().filter(|r| !r.accepted).collect();
    assert_eq!(rejected.len(), 1);
    assert_eq!(rejected[0].query, "weather in Beijing");
    assert_eq!(outcome.records.len(), 4);

    // Registry now serves the refined documentation.
    let manifest = registry.manifest(&tool).unwrap();
    assert_eq!(manifest.documentation.revision, 3);
    assert!(manifest.documentation.current.contains("high_c values"));

    // Chat-round bounds: one analyze/rewrite round per iteration, explorer
    // rounds bounded by the gate retries.
    let (explore, analyze, rewrite) = outcome.chat_rounds;
    assert!(analyze <= options.max_iters);
    assert!(rewrite <= options.max_iters);
    assert!(explore <= options.max_iters * 4);
}

#[test]
fn reported_deltas_match_component_oracles() {
    let (registry, gateway) = setup();
    let tool = ToolId::new("city-weather");
    let outcome = refine_documentation(&registry, &tool, RefineOptions::default(), &gateway).unwrap();

    // Reconstruct the version chain: history holds prior versions oldest
    // first, current is the last.
    let mut versions = outcome.doc.history.clone();
    versions.push(outcome.doc.current.clone());
    assert_eq!(versions.len(), 4);

    for (i, delta) in outcome.deltas.iter().enumerate() {
        let prev = &versions[i];
        let next = &versions[i + 1];
        let cos = cosine(
            &gateway.embed(next).unwrap(),
            &gateway.embed(prev).unwrap(),
        )
        .unwrap();
        let word = bleu(next, prev).unwrap();
        let expected = (cos + word) / 2.0;
        assert!(
            (delta - expected).abs() < 1e-6,
            "delta {i}: reported {delta}, recomputed {expected}"
        );
    }
}

#[test]
fn zero_budget_leaves_document_untouched() {
    let (registry, gateway) = setup();
    let tool = ToolId::new("city-weather");
    let options = RefineOptions {
        max_iters: 0,
        ..RefineOptions::default()
    };
    let outcome = refine_documentation(&registry, &tool, options, &gateway).unwrap();
    assert_eq!(outcome.doc.revision, 0);
    assert_eq!(outcome.doc.current, "Gets weather.");
    assert!(outcome.records.is_empty());
}

#[test]
fn all_candidates_rejected_skips_the_iteration() {
    // A fixture set whose explorer always returns the same query: the
    // first iteration accepts it, the second iteration rejects it four
    // times and skips, leaving the document unchanged after iteration 1.
    let fixtures = vec![
        skein_gateway::Fixture::new(
            "doc-explore",
            &[],
            r#"{"query": "weather in Beijing", "params": {"city": "Beijing"}}"#,
        ),
        skein_gateway::Fixture::new("doc-analyze", &[], "Mention the parameter."),
        skein_gateway::Fixture::new(
            "doc-rewrite",
            &[],
            r#"{"doc": "Reports city weather conditions.", "direction": ""}"#,
        ),
    ];
    let registry = ToolRegistry::new(StubHost::empty(), Arc::new(TraceLog::new()));
    registry.register(weather_manifest()).unwrap();
    let gateway = Gateway::new(
        Arc::new(MockProvider::new(fixtures).unwrap()),
        Arc::new(TraceLog::new()),
    );

    let options = RefineOptions {
        max_iters: 2,
        phi: 0.9,
        tau: 0.99,
    };
    let outcome = refine_documentation(&registry, &ToolId::new("city-weather"), options, &gateway)
        .unwrap();

    assert_eq!(outcome.doc.revision, 1, "only iteration 1 rewrote");
    let rejections = outcome.records.iter().filter(|r| !r.accepted).count();
    assert_eq!(rejections, 4, "1 + 3 reflection retries all rejected");
    assert_eq!(outcome.iterations_run, 2);
}
