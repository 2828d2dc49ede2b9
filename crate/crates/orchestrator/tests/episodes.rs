//! End-to-end episodes over the shipped fixtures: triage routing, all
//! three team configurations, localized re-planning, graph augmentation,
//! and budget degradation.

use skein_core::{Directive, Query, TeamConfiguration, ToolId, TraceLog, VertexId, VertexStatus};
use skein_executor::layers;
use skein_gateway::{Fixture, Gateway, MockProvider};
use skein_orchestrator::{Orchestrator, OrchestratorError, OrchestratorOptions, PromptStore};
use skein_retrieval::SceneGraph;
use skein_tools::stubs::StubHost;
use skein_tools::{Endpoint, ToolDoc, ToolManifest, ToolRegistry, ToolSchema};
use std::sync::Arc;

fn fixtures_dir() -> String {
    format!("{}/../../fixtures", env!("CARGO_MANIFEST_DIR"))
}

fn load_core_fixtures() -> Vec<Fixture> {
    let text = std::fs::read_to_string(format!("{}/gateway/core.jsonl", fixtures_dir())).unwrap();
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn build_registry() -> Arc<ToolRegistry> {
    let corpus = std::fs::read_to_string(format!("{}/tools/corpus.json", fixtures_dir())).unwrap();
    let stubs = StubHost::from_corpus_json(&corpus).unwrap();
    let registry = ToolRegistry::new(stubs, Arc::new(TraceLog::new()));
    let manifests =
        std::fs::read_to_string(format!("{}/tools/registry.json", fixtures_dir())).unwrap();
    registry.register_all_json(&manifests).unwrap();
    Arc::new(registry)
}

fn build_orchestrator(extra_fixtures: Vec<Fixture>, options: OrchestratorOptions) -> (Orchestrator, Arc<TraceLog>) {
    let mut fixtures = extra_fixtures;
    fixtures.extend(load_core_fixtures());
    let trace = Arc::new(TraceLog::new());
    let gateway = Gateway::new(
        Arc::new(MockProvider::new(fixtures).unwrap()),
        trace.clone(),
    );
    let scenes_text =
        std::fs::read_to_string(format!("{}/retrieval/scenes.json", fixtures_dir())).unwrap();
    let scenes = SceneGraph::from_json(&scenes_text).unwrap();
    let orchestrator = Orchestrator::new(
        build_registry(),
        gateway,
        trace.clone(),
        scenes,
        PromptStore::builtin(),
        options,
    );
    (orchestrator, trace)
}

fn standard() -> (Orchestrator, Arc<TraceLog>) {
    build_orchestrator(Vec::new(), OrchestratorOptions::default())
}

const EMPEROR_QUERY: &str = "Who is elder, Emperor Han-Wu or Emperor Caesar, by how many years?";

#[test]
fn triage_routes_the_three_reference_queries() {
    let (orchestrator, trace) = standard();
    let gw_trace = trace;
    let _ = gw_trace;
    let gateway = {
        let fixtures = load_core_fixtures();
        Gateway::new(
            Arc::new(MockProvider::new(fixtures).unwrap()),
            Arc::new(TraceLog::new()),
        )
    };

    let cases = [
        ("What is the name of Emperor Han-Wu?", TeamConfiguration::WriterOnly),
        (
            "Is Beijing's weather good for going out today?",
            TeamConfiguration::ExecutorInclusive,
        ),
        (EMPEROR_QUERY, TeamConfiguration::PlannerEnhanced),
    ];
    for (text, expected) in cases {
        let config = orchestrator
            .triage(&Query::new("q", text), &gateway)
            .unwrap();
        assert_eq!(config, expected, "{text}");
    }
}

#[test]
fn triage_repairs_unparseable_reply_then_defaults() {
    let fixtures = vec![
        Fixture::new("triage", &["previous reply"], "not a config either"),
        Fixture::new("triage", &["odd query"], "hmm, maybe the planner?"),
    ];
    let (orchestrator, _) = build_orchestrator(fixtures.clone(), OrchestratorOptions::default());
    let gateway = Gateway::new(
        Arc::new(MockProvider::new({
            let mut all = fixtures;
            all.extend(load_core_fixtures());
            all
        }).unwrap()),
        Arc::new(TraceLog::new()),
    );
    let config = orchestrator
        .triage(&Query::new("q", "an odd query"), &gateway)
        .unwrap();
    assert_eq!(config, TeamConfiguration::PlannerEnhanced, "fail-safe default");
}

#[test]
fn writer_only_episode_answers_mount_tai() {
    let (orchestrator, _) = standard();
    let episode = orchestrator
        .run_episode(&Query::new("q", "How tall is Mount Tai?"))
        .unwrap();
    assert_eq!(episode.config, TeamConfiguration::WriterOnly);
    assert!(episode.dag.is_none());
    let answer = episode.answer.unwrap();
    assert!(!answer.degraded);
    assert!(answer.text().contains("1,545 meters"), "{}", answer.text());
}

#[test]
fn executor_inclusive_episode_answers_beijing_weather() {
    let (orchestrator, _) = standard();
    let episode = orchestrator
        .run_episode(&Query::new(
            "q",
            "Is Beijing's weather good for going out today?",
        ))
        .unwrap();
    assert_eq!(episode.config, TeamConfiguration::ExecutorInclusive);
    assert!(episode.boundary.is_some());
    let answer = episode.answer.unwrap();
    assert!(
        answer.text().contains("12°C to 25°C"),
        "{}",
        answer.text()
    );
}

#[test]
fn planner_enhanced_episode_solves_the_emperor_query() {
    let (orchestrator, _) = standard();
    let episode = orchestrator
        .run_episode(&Query::new("q", EMPEROR_QUERY))
        .unwrap();
    assert_eq!(episode.config, TeamConfiguration::PlannerEnhanced);

    let dag = episode.dag.as_ref().unwrap();
    assert_eq!(dag.vertices.len(), 3);
    let plan = layers(dag).unwrap();
    assert_eq!(
        plan,
        vec![
            vec![VertexId::new("v1"), VertexId::new("v2")],
            vec![VertexId::new("v3")],
        ]
    );
    assert!(dag.vertices.values().all(|t| t.status.is_done()));
    let v3 = dag.vertex(&VertexId::new("v3")).unwrap();
    assert_eq!(v3.output.as_ref().unwrap()["result"], 56);

    let answer = episode.answer.unwrap();
    assert!(!answer.degraded);
    assert!(
        answer.text().contains("older by approximately 56 years"),
        "{}",
        answer.text()
    );
    // Citations point at both search hits.
    assert!(answer.statements.iter().any(|s| s.citations == vec![1, 2]));

    // Directive log stays within its bound.
    let bound = plan.len() + orchestrator.options().max_replans + 1;
    assert!(episode.directives.len() <= bound);
    assert!(matches!(episode.directives.last(), Some(Directive::Finalize)));
}

#[test]
fn emperor_episode_is_deterministic() {
    let (orchestrator, _) = standard();
    let a = orchestrator
        .run_episode(&Query::new("q", EMPEROR_QUERY))
        .unwrap();
    let b = orchestrator
        .run_episode(&Query::new("q", EMPEROR_QUERY))
        .unwrap();
    assert_eq!(a.answer.unwrap().text(), b.answer.unwrap().text());
}

#[test]
fn empty_boundary_plans_a_single_tool_free_vertex() {
    let (orchestrator, _) = standard();
    let gateway = Gateway::new(
        Arc::new(MockProvider::new(load_core_fixtures()).unwrap()),
        Arc::new(TraceLog::new()),
    );
    let boundary = skein_retrieval::CapabilityBoundary::empty();
    let dag = orchestrator
        .plan(&Query::new("q", "just think"), &boundary, &gateway)
        .unwrap();
    assert_eq!(dag.vertices.len(), 1);
    let only = dag.vertices.values().next().unwrap();
    assert_eq!(only.tool_binding, skein_core::ToolBinding::ToolFree);
}

#[test]
fn sketch_binding_outside_boundary_is_rejected() {
    let extra = vec![
        Fixture::new("triage", &["rogue"], "PlannerEnhanced"),
        Fixture::new(
            "plan-sketch",
            &["rogue"],
            r#"{"vertices": [{"id": "x1", "description": "use a ghost tool", "tool": "ghost-tool", "args": {}}], "edges": []}"#,
        ),
    ];
    let (orchestrator, _) = build_orchestrator(extra, OrchestratorOptions::default());
    let err = orchestrator
        .run_episode(&Query::new("q", "a rogue plan request"))
        .unwrap_err();
    assert!(matches!(
        err,
        OrchestratorError::BindingOutsideBoundary(id) if id == ToolId::new("ghost-tool")
    ));
}

/// A failing primary search with no fallback forces a localized replan;
/// the sibling search's completed work must survive.
#[test]
fn failed_vertex_triggers_localized_replan_preserving_siblings() {
    let replan_sketch = r#"{"vertices": [
        {"id": "v1b", "description": "Retry the first birthdate lookup",
         "tool": "baidu-ai-search", "args": {"query": "birthdate of Emperor Han-Wu"}},
        {"id": "v3b", "description": "Calculate the difference between the two birthdates",
         "tool": "calculator", "args": {"a": {"$from": "v1b"}, "b": {"$from": "v2"}, "op": "abs_diff"}}
    ], "edges": [["v1b", "v3b"], ["v2", "v3b"]]}"#;
    let plan_sketch = r#"{"vertices": [
        {"id": "v1", "description": "Search the first birthdate with the legacy engine",
         "tool": "legacy-search", "args": {"query": "birthdate of Emperor Han-Wu"}},
        {"id": "v2", "description": "Search the birthdate of Emperor Caesar",
         "tool": "baidu-ai-search", "args": {"query": "birthdate of Emperor Caesar"}},
        {"id": "v3", "description": "Calculate the difference between the two birthdates",
         "tool": "calculator", "args": {"a": {"$from": "v1"}, "b": {"$from": "v2"}, "op": "abs_diff"}}
    ], "edges": [["v1", "v3"], ["v2", "v3"]]}"#;

    let extra = vec![
        Fixture::new("triage", &["flaky engines"], "PlannerEnhanced"),
        Fixture::new("plan-sketch", &["flaky engines"], plan_sketch),
        Fixture::new("replan-sketch", &["legacy engine"], replan_sketch),
        Fixture::new(
            "write",
            &["v1b"],
            "Emperor Wu of Han was older by approximately 56 years. [1][2]",
        ),
    ];
    let (orchestrator, _) = build_orchestrator(extra, OrchestratorOptions::default());

    // Register the doomed tool (no toolkit, so no fallback).
    let registry = build_registry();
    registry
        .register(ToolManifest {
            tool_id: "legacy-search".into(),
            name: "legacy search".into(),
            semantic_role: "search".into(),
            cost: 3.0,
            latency_bounds: (1, 500),
            input_schema: ToolSchema::any(),
            output_schema: ToolSchema::any(),
            endpoint: Endpoint::Builtin("broken".into()),
            documentation: ToolDoc::new("An aging search backend that no longer responds."),
        })
        .unwrap();
    // Rebuild with the extended registry.
    let mut fixtures = vec![
        Fixture::new("triage", &["flaky engines"], "PlannerEnhanced"),
        Fixture::new("plan-sketch", &["flaky engines"], plan_sketch),
        Fixture::new("replan-sketch", &["legacy engine"], replan_sketch),
        Fixture::new(
            "write",
            &["v1b"],
            "Emperor Wu of Han was older by approximately 56 years. [1][2]",
        ),
    ];
    fixtures.extend(load_core_fixtures());
    let trace = Arc::new(TraceLog::new());
    let gateway = Gateway::new(Arc::new(MockProvider::new(fixtures).unwrap()), trace.clone());
    let scenes = SceneGraph::default();
    // Thirteen tools registered now; widen the boundary so the plan's
    // bindings all stay inside it.
    let options = OrchestratorOptions {
        boundary_cap: 16,
        ..OrchestratorOptions::default()
    };
    let orchestrator2 = Orchestrator::new(
        registry,
        gateway,
        trace,
        scenes,
        PromptStore::builtin(),
        options,
    );
    drop(orchestrator);

    let episode = orchestrator2
        .run_episode(&Query::new(
            "q",
            "Compare the two emperors using the flaky engines",
        ))
        .unwrap();

    // The replan directive fired and named the failed subgraph.
    let replans: Vec<&Directive> = episode
        .directives
        .iter()
        .filter(|d| matches!(d, Directive::ReplanSubgraph { .. }))
        .collect();
    assert_eq!(replans.len(), 1);
    if let Directive::ReplanSubgraph { vertices, .. } = replans[0] {
        assert!(vertices.contains(&VertexId::new("v1")));
        assert!(vertices.contains(&VertexId::new("v3")), "descendants included");
        assert!(!vertices.contains(&VertexId::new("v2")));
    }

    let dag = episode.dag.as_ref().unwrap();
    assert!(dag.vertex(&VertexId::new("v1")).is_none(), "v1 replaced");
    let v2 = dag.vertex(&VertexId::new("v2")).unwrap();
    assert!(v2.status.is_done(), "sibling work preserved");
    assert_eq!(v2.attempts, 1, "v2 never re-ran");
    let v3b = dag.vertex(&VertexId::new("v3b")).unwrap();
    assert_eq!(v3b.output.as_ref().unwrap()["result"], 56);

    let answer = episode.answer.unwrap();
    assert!(answer.text().contains("56 years"));
}

/// An assessor that flags missing context after the computation layer
/// grows the graph downstream; prior depths stay untouched.
#[test]
fn incomplete_results_augment_the_dag_downstream() {
    let plan_sketch = r#"{"vertices": [
        {"id": "v1", "description": "Search the birthdate of Emperor Han-Wu",
         "tool": "baidu-ai-search", "args": {"query": "birthdate of Emperor Han-Wu"}},
        {"id": "v2", "description": "Search the birthdate of Emperor Caesar",
         "tool": "baidu-ai-search", "args": {"query": "birthdate of Emperor Caesar"}},
        {"id": "v3", "description": "Calculate the difference between the two birthdates",
         "tool": "calculator", "args": {"a": {"$from": "v1"}, "b": {"$from": "v2"}, "op": "abs_diff"}}
    ], "edges": [["v1", "v3"], ["v2", "v3"]]}"#;
    let augment_sketch = r#"{"vertices": [
        {"id": "v4", "description": "Add historical context on the age difference", "args": {}}
    ], "edges": [["v3", "v4"]]}"#;

    let extra = vec![
        Fixture::new("triage", &["age gap with context"], "PlannerEnhanced"),
        Fixture::new("plan-sketch", &["age gap with context"], plan_sketch),
        // Declared before the core catch-all: once v4 exists, complete.
        Fixture::new("assess", &["v4"], "COMPLETE"),
        Fixture::new(
            "assess",
            &["abs_diff"],
            "INCOMPLETE: missing the broader historical context",
        ),
        Fixture::new("augment-sketch", &["broader historical context"], augment_sketch),
    ];
    let (orchestrator, _) = build_orchestrator(extra, OrchestratorOptions::default());

    let episode = orchestrator
        .run_episode(&Query::new("q", "Find the age gap with context"))
        .unwrap();

    let dag = episode.dag.as_ref().unwrap();
    assert_eq!(dag.vertices.len(), 4);
    let depths = skein_core::topological_depths(dag).unwrap();
    assert_eq!(depths[&VertexId::new("v1")], 0);
    assert_eq!(depths[&VertexId::new("v2")], 0);
    assert_eq!(depths[&VertexId::new("v3")], 1);
    assert_eq!(depths[&VertexId::new("v4")], 2, "appended downstream");
    assert!(dag
        .vertex(&VertexId::new("v4"))
        .unwrap()
        .status
        .is_done());
    assert!(episode
        .directives
        .iter()
        .any(|d| matches!(d, Directive::AugmentDag { .. })));
}

#[test]
fn replan_yielding_a_cycle_fails_and_leaves_the_dag_intact() {
    let cycle_sketch = r#"{"vertices": [
        {"id": "b2", "description": "replacement step", "args": {}}
    ], "edges": [["a", "b2"], ["b2", "a"]]}"#;
    let extra = vec![Fixture::new("replan-sketch", &["make a loop"], cycle_sketch)];
    let (orchestrator, _) = build_orchestrator(extra, OrchestratorOptions::default());
    let gateway = Gateway::new(
        Arc::new(
            MockProvider::new({
                let mut all = vec![Fixture::new("replan-sketch", &["make a loop"], cycle_sketch)];
                all.extend(load_core_fixtures());
                all
            })
            .unwrap(),
        ),
        Arc::new(TraceLog::new()),
    );

    let dag = skein_core::TaskDag::new(
        [
            skein_core::SubTask::new("a", "first step"),
            skein_core::SubTask::new("b", "make a loop out of this step"),
        ],
        [(VertexId::new("a"), VertexId::new("b"))],
    )
    .unwrap();
    let directive = Directive::ReplanSubgraph {
        vertices: [VertexId::new("b")].into_iter().collect(),
        reason: "make a loop".into(),
    };
    let before = dag.clone();
    let err = orchestrator
        .replan(
            &Query::new("q", "make a loop"),
            &dag,
            &directive,
            &skein_retrieval::CapabilityBoundary::empty(),
            &gateway,
        )
        .unwrap_err();
    assert!(matches!(err, OrchestratorError::CycleDetected(_)), "{err}");
    assert_eq!(dag, before, "caller's graph untouched on error");
}

#[test]
fn chat_budget_exhaustion_degrades_the_episode() {
    let options = OrchestratorOptions {
        chat_budget: Some(1),
        ..OrchestratorOptions::default()
    };
    let (orchestrator, _) = build_orchestrator(Vec::new(), options);
    let episode = orchestrator
        .run_episode(&Query::new("q", "How tall is Mount Tai?"))
        .unwrap();
    let answer = episode.answer.unwrap();
    assert!(answer.degraded);
}

#[test]
fn augmentation_may_not_point_at_existing_vertices() {
    let bad_sketch = r#"{"vertices": [
        {"id": "n1", "description": "new step", "args": {}}
    ], "edges": [["n1", "v-old"]]}"#;
    let extra = vec![Fixture::new("augment-sketch", &["expand badly"], bad_sketch)];
    let (orchestrator, _) = build_orchestrator(extra.clone(), OrchestratorOptions::default());
    let gateway = Gateway::new(
        Arc::new(
            MockProvider::new({
                let mut all = extra;
                all.extend(load_core_fixtures());
                all
            })
            .unwrap(),
        ),
        Arc::new(TraceLog::new()),
    );

    let mut done = skein_core::SubTask::new("v-old", "finished work");
    done.status = VertexStatus::Done;
    done.output = Some(serde_json::json!({"ok": true}));
    let dag = skein_core::TaskDag::new([done], []).unwrap();
    let err = orchestrator
        .replan(
            &Query::new("q", "expand badly please"),
            &dag,
            &Directive::AugmentDag {
                reason: "expand badly".into(),
            },
            &skein_retrieval::CapabilityBoundary::empty(),
            &gateway,
        )
        .unwrap_err();
    assert!(matches!(err, OrchestratorError::NotDownstream(_, _)), "{err}");
}
