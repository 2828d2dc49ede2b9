//! The master and planner agents: per-query triage into a team
//! configuration, two-phase planning into a validated task graph, layer
//! monitoring with re-action directives, localized re-planning, and the
//! full episode loop that wires retrieval, execution, and writing
//! together.

pub mod prompts;

pub use prompts::PromptStore;

use serde::{Deserialize, Serialize};
use skein_core::{
    dag_from_wire, topological_depths, DagWire, Directive, Query, SubTask, TaskDag,
    TeamConfiguration, ToolBinding, ToolId, TraceLog, ValidationReport, Value, VertexId,
    VertexStatus, Violation,
};
use skein_executor::{layers, ExecutionBudget, Executor, VertexResult};
use skein_gateway::{Gateway, GatewayError};
use skein_retrieval::{build_boundary, CapabilityBoundary, SceneGraph};
use skein_tools::ToolRegistry;
use skein_writer::{synthesize, CitationedAnswer, Statement};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("triage failed: {0}")]
    Triage(String),
    #[error("sketch could not be parsed after repair: {0}")]
    SketchParse(String),
    #[error("plan binds tool {0} outside the capability boundary")]
    BindingOutsideBoundary(ToolId),
    #[error("planned graph contains a cycle: {0:?}")]
    CycleDetected(Vec<String>),
    #[error("replan would modify completed vertex {0}")]
    ReplanTouchesCompleted(VertexId),
    #[error("augmentation must only add downstream vertices, offending edge ({0}, {1})")]
    NotDownstream(String, String),
    #[error("directive {0:?} is not a replan directive")]
    NotReplannable(&'static str),
    #[error("gateway error: {0}")]
    Gateway(#[from] GatewayError),
    #[error("dag error: {0}")]
    Dag(#[from] skein_core::DagError),
    #[error("retrieval error: {0}")]
    Retrieval(#[from] skein_retrieval::RetrievalError),
    #[error("writer error: {0}")]
    Writer(#[from] skein_writer::WriterError),
}

impl OrchestratorError {
    /// Budget exhaustion degrades an episode instead of failing it. The
    /// gateway error may arrive wrapped by whichever stage hit the limit.
    pub fn is_budget_exhausted(&self) -> bool {
        match self {
            OrchestratorError::Gateway(e) => is_budget(e),
            OrchestratorError::Writer(skein_writer::WriterError::Gateway(e)) => is_budget(e),
            OrchestratorError::Retrieval(skein_retrieval::RetrievalError::Gateway(e)) => {
                is_budget(e)
            }
            _ => false,
        }
    }
}

fn is_budget(e: &GatewayError) -> bool {
    matches!(e, GatewayError::BudgetExceeded { .. })
}

/// Per-query state accumulated across an episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Episode {
    pub query: Query,
    pub config: TeamConfiguration,
    /// Present exactly for planner-enhanced episodes.
    pub dag: Option<TaskDag>,
    pub boundary: Option<CapabilityBoundary>,
    pub directives: Vec<Directive>,
    pub answer: Option<CitationedAnswer>,
    pub trace_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrchestratorOptions {
    /// Replan/augment directives honored per episode.
    pub max_replans: usize,
    pub boundary_cap: usize,
    /// Scene-bonus blend weight for the completeness re-rank.
    pub alpha: f64,
    pub execution: ExecutionBudget,
    /// Chat calls allowed per episode; exhaustion degrades the answer.
    pub chat_budget: Option<u64>,
}

impl Default for OrchestratorOptions {
    fn default() -> Self {
        Self {
            max_replans: 2,
            boundary_cap: skein_retrieval::DEFAULT_BOUNDARY_CAP,
            alpha: skein_retrieval::DEFAULT_ALPHA,
            execution: ExecutionBudget::default(),
            chat_budget: None,
        }
    }
}

pub struct Orchestrator {
    registry: Arc<ToolRegistry>,
    gateway: Gateway,
    trace: Arc<TraceLog>,
    scenes: SceneGraph,
    prompts: PromptStore,
    options: OrchestratorOptions,
    episode_counter: AtomicU64,
}

impl Orchestrator {
    pub fn new(
        registry: Arc<ToolRegistry>,
        gateway: Gateway,
        trace: Arc<TraceLog>,
        scenes: SceneGraph,
        prompts: PromptStore,
        options: OrchestratorOptions,
    ) -> Self {
        Self {
            registry,
            gateway,
            trace,
            scenes,
            prompts,
            options,
            episode_counter: AtomicU64::new(0),
        }
    }

    pub fn options(&self) -> &OrchestratorOptions {
        &self.options
    }

    fn context_digest(query: &Query) -> String {
        if query.context.is_empty() {
            "(none)".to_string()
        } else {
            query
                .context
                .iter()
                .map(|t| format!("Q: {} A: {}", t.query, t.answer))
                .collect::<Vec<_>>()
                .join("\n")
        }
    }

    /// Determines the team configuration for a query: one chat call whose
    /// reply must be exactly one of the three configuration names. An
    /// unparseable reply gets one repair prompt, then the most capable
    /// team wins as the fail-safe.
    pub fn triage(
        &self,
        query: &Query,
        gateway: &Gateway,
    ) -> Result<TeamConfiguration, OrchestratorError> {
        let prompt = self.prompts.render(
            "triage",
            &[
                ("query", query.text.as_str()),
                ("context", &Self::context_digest(query)),
            ],
        );
        let reply = match gateway.ask("triage", &prompt) {
            Ok(r) => r,
            Err(e) if is_budget(&e) => return Err(OrchestratorError::Gateway(e)),
            // One retry on transport-level failure, then surface.
            Err(first) => match gateway.ask("triage", &prompt) {
                Ok(r) => r,
                Err(e) if is_budget(&e) => return Err(OrchestratorError::Gateway(e)),
                Err(_) => return Err(OrchestratorError::Triage(first.to_string())),
            },
        };
        if let Ok(config) = reply.text.trim().parse() {
            return Ok(config);
        }
        let repair = format!(
            "{prompt}\nYour previous reply {:?} was not one of the three names. Answer with exactly one of: WriterOnly, ExecutorInclusive, PlannerEnhanced.",
            reply.text.trim()
        );
        match gateway.ask("triage", &repair) {
            Ok(second) => Ok(second
                .text
                .trim()
                .parse()
                .unwrap_or(TeamConfiguration::PlannerEnhanced)),
            Err(_) => Ok(TeamConfiguration::PlannerEnhanced),
        }
    }

    fn tools_digest(&self, boundary: &CapabilityBoundary) -> String {
        let mut out = String::new();
        for id in &boundary.tool_ids {
            if let Ok(manifest) = self.registry.manifest(id) {
                let fields: Vec<String> = manifest
                    .input_schema
                    .fields
                    .iter()
                    .map(|(name, spec)| format!("{name} ({:?})", spec.kind))
                    .collect();
                out.push_str(&format!(
                    "- {}: {} [role {}] inputs: {}\n",
                    id,
                    manifest.documentation.current.lines().next().unwrap_or(""),
                    manifest.semantic_role,
                    if fields.is_empty() {
                        "any".to_string()
                    } else {
                        fields.join(", ")
                    },
                ));
            }
        }
        out
    }

    /// Extracts the JSON object from a sketch reply, tolerating prose or
    /// code fences around it.
    fn extract_json(text: &str) -> Option<&str> {
        let start = text.find('{')?;
        let end = text.rfind('}')?;
        (end >= start).then(|| &text[start..=end])
    }

    fn parse_sketch(text: &str) -> Result<(DagWire, ValidationReport), String> {
        let json = Self::extract_json(text).ok_or("no JSON object in reply")?;
        let wire = DagWire::from_json(json).map_err(|e| e.to_string())?;
        let report = skein_core::validate_wire(&wire);
        Ok((wire, report))
    }

    fn report_to_error(report: &ValidationReport) -> OrchestratorError {
        for violation in &report.violations {
            if let Violation::Cycle { members } = violation {
                return OrchestratorError::CycleDetected(members.clone());
            }
        }
        OrchestratorError::SketchParse(
            report
                .violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        )
    }

    /// Requests a sketch under `tag`, retrying once with the failure
    /// appended before giving up. Full plans validate the wire form here;
    /// replan/augment fragments parse syntax only, because their edges
    /// legitimately reference vertices outside the fragment — the merged
    /// graph is validated instead.
    fn sketch_with_repair(
        &self,
        gateway: &Gateway,
        tag: &str,
        vars: &[(&str, &str)],
        strict: bool,
    ) -> Result<DagWire, OrchestratorError> {
        let accept = |text: &str| -> Result<DagWire, String> {
            let (wire, report) = Self::parse_sketch(text)?;
            if strict && !report.is_ok() {
                return Err(Self::report_to_error(&report).to_string());
            }
            Ok(wire)
        };

        let prompt = {
            let mut vars = vars.to_vec();
            vars.push(("error", ""));
            self.prompts.render(tag, &vars)
        };
        let reply = gateway.ask(tag, &prompt)?;
        let first_failure = match accept(&reply.text) {
            Ok(wire) => return Ok(wire),
            Err(e) => e,
        };

        let note = format!("Previous attempt failed: {first_failure}. Emit corrected JSON.");
        let repair_prompt = {
            let mut vars = vars.to_vec();
            vars.push(("error", note.as_str()));
            self.prompts.render(tag, &vars)
        };
        let retry = gateway.ask(tag, &repair_prompt)?;
        match accept(&retry.text) {
            Ok(wire) => Ok(wire),
            Err(_) if strict => {
                // Preserve the specific violation class (cycles stay
                // cycles) rather than flattening to a parse error.
                match Self::parse_sketch(&retry.text) {
                    Ok((_, report)) if !report.is_ok() => Err(Self::report_to_error(&report)),
                    Err(e) => Err(OrchestratorError::SketchParse(e)),
                    Ok(_) => unreachable!("accept() accepted above"),
                }
            }
            Err(e) => Err(OrchestratorError::SketchParse(e)),
        }
    }

    fn check_bindings(
        &self,
        dag: &TaskDag,
        boundary: &CapabilityBoundary,
    ) -> Result<(), OrchestratorError> {
        for task in dag.vertices.values() {
            if let ToolBinding::Tool(id) = &task.tool_binding {
                if !boundary.contains(id) {
                    return Err(OrchestratorError::BindingOutsideBoundary(id.clone()));
                }
            }
        }
        Ok(())
    }

    /// Two-phase planning: free-form reasoning, then a structured sketch
    /// parsed into a validated task graph. Every tool binding must sit
    /// inside the capability boundary. An empty boundary short-circuits to
    /// a single tool-free vertex.
    pub fn plan(
        &self,
        query: &Query,
        boundary: &CapabilityBoundary,
        gateway: &Gateway,
    ) -> Result<TaskDag, OrchestratorError> {
        if boundary.tool_ids.is_empty() {
            let vertex = SubTask::new("t1", query.text.clone());
            return Ok(TaskDag::new([vertex], []).expect("single vertex"));
        }

        let tools = self.tools_digest(boundary);
        let cot_prompt = self.prompts.render(
            "plan-cot",
            &[("query", query.text.as_str()), ("tools", tools.as_str())],
        );
        let cot = gateway.ask("plan-cot", &cot_prompt)?.text;

        let wire = self.sketch_with_repair(
            gateway,
            "plan-sketch",
            &[
                ("query", query.text.as_str()),
                ("cot", cot.as_str()),
                ("tools", tools.as_str()),
            ],
            true,
        )?;
        let dag = dag_from_wire(&wire).map_err(|report| Self::report_to_error(&report))?;
        self.check_bindings(&dag, boundary)?;
        Ok(dag)
    }

    fn results_digest(dag: &TaskDag) -> String {
        let mut out = String::new();
        for (id, task) in &dag.vertices {
            let status = match &task.status {
                VertexStatus::Done => "done".to_string(),
                VertexStatus::Pending => "pending".to_string(),
                VertexStatus::Running => "running".to_string(),
                VertexStatus::Failed { reason } => format!("failed: {reason}"),
            };
            out.push_str(&format!("{id} [{status}] {}", task.description));
            if let Some(output) = &task.output {
                out.push_str(&format!(" => {output}"));
            }
            out.push('\n');
        }
        out
    }

    /// Judges a layer's results. Failed vertices trigger a localized
    /// replan of the failed subgraphs; otherwise one assessment call
    /// decides between proceeding (finalizing once everything is done)
    /// and augmenting the graph with follow-up work.
    pub fn assess(
        &self,
        query: &Query,
        dag: &TaskDag,
        layer_results: &[VertexResult],
        gateway: &Gateway,
    ) -> Result<Directive, OrchestratorError> {
        let failed: Vec<&VertexResult> =
            layer_results.iter().filter(|r| r.status.is_failed()).collect();
        if !failed.is_empty() {
            let mut vertices = BTreeSet::new();
            let mut reasons = Vec::new();
            for f in failed {
                vertices.extend(dag.descendants_including(&f.id));
                if let VertexStatus::Failed { reason } = &f.status {
                    reasons.push(format!("{}: {reason}", f.id));
                }
            }
            return Ok(Directive::ReplanSubgraph {
                vertices,
                reason: reasons.join("; "),
            });
        }

        let prompt = self.prompts.render(
            "assess",
            &[
                ("query", query.text.as_str()),
                ("results", Self::results_digest(dag).as_str()),
            ],
        );
        let reply = gateway.ask("assess", &prompt)?;
        let text = reply.text.trim();
        let upper = text.to_ascii_uppercase();
        if upper.starts_with("COMPLETE") {
            let all_done = dag.vertices.values().all(|t| t.status.is_done());
            if all_done {
                Ok(Directive::Finalize)
            } else {
                Ok(Directive::Continue)
            }
        } else if upper.starts_with("INCOMPLETE") {
            let reason = text
                .split_once(':')
                .map(|(_, rest)| rest.trim())
                .unwrap_or("results judged incomplete")
                .to_string();
            Ok(Directive::AugmentDag { reason })
        } else {
            // One repair attempt, then surface the protocol breach.
            let repair = format!(
                "{prompt}\nYour previous reply {text:?} did not follow the protocol. Answer COMPLETE or INCOMPLETE: <reason>."
            );
            let second = gateway.ask("assess", &repair)?;
            let upper = second.text.trim().to_ascii_uppercase();
            if upper.starts_with("COMPLETE") {
                let all_done = dag.vertices.values().all(|t| t.status.is_done());
                Ok(if all_done {
                    Directive::Finalize
                } else {
                    Directive::Continue
                })
            } else if upper.starts_with("INCOMPLETE") {
                Ok(Directive::AugmentDag {
                    reason: second.text.trim().to_string(),
                })
            } else {
                Err(OrchestratorError::Triage(format!(
                    "assessor reply unparseable: {:?}",
                    second.text
                )))
            }
        }
    }

    /// Rebuilds the graph per a replan directive. The affected subgraph is
    /// replaced by freshly planned vertices (external edges reattached by
    /// the sketch referencing preserved ids); augmentation appends
    /// downstream vertices only. Completed vertices keep their status and
    /// outputs, and any error leaves the original graph untouched.
    pub fn replan(
        &self,
        query: &Query,
        dag: &TaskDag,
        directive: &Directive,
        boundary: &CapabilityBoundary,
        gateway: &Gateway,
    ) -> Result<TaskDag, OrchestratorError> {
        match directive {
            Directive::ReplanSubgraph { vertices, reason } => {
                self.replan_subgraph(query, dag, vertices, reason, boundary, gateway)
            }
            Directive::AugmentDag { reason } => {
                self.augment(query, dag, reason, boundary, gateway)
            }
            other => Err(OrchestratorError::NotReplannable(other.kind())),
        }
    }

    fn replan_subgraph(
        &self,
        query: &Query,
        dag: &TaskDag,
        affected: &BTreeSet<VertexId>,
        reason: &str,
        boundary: &CapabilityBoundary,
        gateway: &Gateway,
    ) -> Result<TaskDag, OrchestratorError> {
        let affected_digest: String = affected
            .iter()
            .filter_map(|id| dag.vertex(id))
            .map(|t| format!("{}: {}\n", t.id, t.description))
            .collect();
        let preserved_digest: String = dag
            .vertices
            .values()
            .filter(|t| !affected.contains(&t.id))
            .map(|t| {
                let output = t
                    .output
                    .as_ref()
                    .map(|o| format!(" => {o}"))
                    .unwrap_or_default();
                format!("{}: {}{output}\n", t.id, t.description)
            })
            .collect();

        let wire = self.sketch_with_repair(
            gateway,
            "replan-sketch",
            &[
                ("query", query.text.as_str()),
                ("reason", reason),
                ("affected", affected_digest.as_str()),
                ("preserved", preserved_digest.as_str()),
                ("tools", self.tools_digest(boundary).as_str()),
            ],
            false,
        )?;

        // Merge: preserved vertices and their internal edges survive; the
        // replacement provides fresh vertices plus edges that may attach
        // to preserved ids. The merged graph is validated whole.
        let mut vertices: Vec<SubTask> = dag
            .vertices
            .values()
            .filter(|t| !affected.contains(&t.id))
            .cloned()
            .collect();
        let preserved_ids: BTreeSet<VertexId> = vertices.iter().map(|t| t.id.clone()).collect();

        let (new_tasks, violations) = skein_core::subtasks_from_wire(&wire);
        if !violations.is_empty() {
            return Err(Self::report_to_error(&ValidationReport { violations }));
        }
        for task in &new_tasks {
            if preserved_ids.contains(&task.id) {
                return Err(OrchestratorError::ReplanTouchesCompleted(task.id.clone()));
            }
        }
        self.check_bindings_on(&new_tasks, boundary)?;

        vertices.extend(new_tasks);
        let mut edges: Vec<(VertexId, VertexId)> = dag
            .edges
            .iter()
            .filter(|(f, t)| preserved_ids.contains(f) && preserved_ids.contains(t))
            .cloned()
            .collect();
        for (f, t) in &wire.edges {
            edges.push((VertexId::new(f.clone()), VertexId::new(t.clone())));
        }

        let candidate = TaskDag::new(vertices, edges)?;
        let report = skein_core::validate_dag(&candidate);
        if !report.is_ok() {
            return Err(Self::report_to_error(&report));
        }
        topological_depths(&candidate)?;
        Ok(candidate)
    }

    fn check_bindings_on(
        &self,
        tasks: &[SubTask],
        boundary: &CapabilityBoundary,
    ) -> Result<(), OrchestratorError> {
        for task in tasks {
            if let ToolBinding::Tool(id) = &task.tool_binding {
                if !boundary.contains(id) {
                    return Err(OrchestratorError::BindingOutsideBoundary(id.clone()));
                }
            }
        }
        Ok(())
    }

    fn augment(
        &self,
        query: &Query,
        dag: &TaskDag,
        reason: &str,
        boundary: &CapabilityBoundary,
        gateway: &Gateway,
    ) -> Result<TaskDag, OrchestratorError> {
        let wire = self.sketch_with_repair(
            gateway,
            "augment-sketch",
            &[
                ("query", query.text.as_str()),
                ("reason", reason),
                ("results", Self::results_digest(dag).as_str()),
                ("tools", self.tools_digest(boundary).as_str()),
            ],
            false,
        )?;

        let existing: BTreeSet<String> =
            dag.vertices.keys().map(|id| id.to_string()).collect();
        for vertex in &wire.vertices {
            if existing.contains(&vertex.id) {
                return Err(OrchestratorError::ReplanTouchesCompleted(VertexId::new(
                    vertex.id.clone(),
                )));
            }
        }
        let fresh_ids: BTreeSet<&str> = wire.vertices.iter().map(|v| v.id.as_str()).collect();
        for (from, to) in &wire.edges {
            // Downstream-only growth: targets must be new vertices.
            if !fresh_ids.contains(to.as_str()) {
                return Err(OrchestratorError::NotDownstream(from.clone(), to.clone()));
            }
            if !fresh_ids.contains(from.as_str()) && !existing.contains(from) {
                return Err(OrchestratorError::NotDownstream(from.clone(), to.clone()));
            }
        }

        let (new_tasks, violations) = skein_core::subtasks_from_wire(&wire);
        if !violations.is_empty() {
            return Err(Self::report_to_error(&ValidationReport { violations }));
        }
        self.check_bindings_on(&new_tasks, boundary)?;

        let mut vertices: Vec<SubTask> = dag.vertices.values().cloned().collect();
        vertices.extend(new_tasks);
        let mut edges = dag.edges.clone();
        for (f, t) in &wire.edges {
            edges.push((VertexId::new(f.clone()), VertexId::new(t.clone())));
        }
        let candidate = TaskDag::new(vertices, edges)?;
        let report = skein_core::validate_dag(&candidate);
        if !report.is_ok() {
            return Err(Self::report_to_error(&report));
        }
        Ok(candidate)
    }

    /// Collects evidence documents out of completed vertex outputs, layer
    /// order first, vertex id second. Search-style outputs contribute
    /// their hits; other outputs carry no citable evidence.
    fn collect_documents(dag: &TaskDag) -> Vec<skein_core::Document> {
        let mut docs = Vec::new();
        let mut seen = BTreeSet::new();
        let order: Vec<VertexId> = match layers(dag) {
            Ok(plan) => plan.into_iter().flatten().collect(),
            Err(_) => dag.vertices.keys().cloned().collect(),
        };
        for id in order {
            let Some(task) = dag.vertex(&id) else { continue };
            let Some(output) = &task.output else { continue };
            let Some(hits) = output.get("hits").and_then(Value::as_array) else {
                continue;
            };
            for hit in hits {
                let doc_id = hit
                    .get("id")
                    .and_then(Value::as_str)
                    .unwrap_or_default()
                    .to_string();
                if doc_id.is_empty() || !seen.insert(doc_id.clone()) {
                    continue;
                }
                docs.push(skein_core::Document::new(
                    doc_id,
                    hit.get("title").and_then(Value::as_str).unwrap_or_default(),
                    hit.get("snippet")
                        .and_then(Value::as_str)
                        .unwrap_or_default(),
                ));
            }
        }
        docs
    }

    fn done_outputs(dag: &TaskDag) -> Vec<(VertexId, Value)> {
        let order: Vec<VertexId> = match layers(dag) {
            Ok(plan) => plan.into_iter().flatten().collect(),
            Err(_) => dag.vertices.keys().cloned().collect(),
        };
        order
            .into_iter()
            .filter_map(|id| {
                let task = dag.vertex(&id)?;
                task.output.clone().map(|o| (id, o))
            })
            .collect()
    }

    fn degraded_answer(note: &str, outputs: &[(VertexId, Value)]) -> CitationedAnswer {
        let mut claim = format!("The answer could not be completed: {note}.");
        if !outputs.is_empty() {
            let digest: Vec<String> = outputs
                .iter()
                .map(|(id, v)| format!("{id}: {v}"))
                .collect();
            claim.push_str(&format!(" Partial results: {}", digest.join("; ")));
        }
        CitationedAnswer {
            statements: vec![Statement::new(claim, vec![])],
            degraded: true,
        }
    }

    /// Runs one full episode: triage picks the team, the team produces the
    /// answer. Budget exhaustion finishes the episode with a degraded
    /// best-effort answer rather than an error.
    pub fn run_episode(&self, query: &Query) -> Result<Episode, OrchestratorError> {
        let n = self.episode_counter.fetch_add(1, Ordering::SeqCst);
        let trace_id = format!(
            "ep-{n}-{:08x}",
            skein_core::rng::fnv1a64(query.text.as_bytes()) as u32
        );
        let gateway = match self.options.chat_budget {
            Some(limit) => self.gateway.for_trace(&trace_id).with_budget(limit),
            None => self.gateway.for_trace(&trace_id),
        };
        self.trace.emit(
            &trace_id,
            "episode.start",
            serde_json::json!({ "query": query.text }),
        );

        let result = self.run_episode_inner(query, &trace_id, &gateway);
        let episode = match result {
            Ok(episode) => episode,
            Err(e) if e.is_budget_exhausted() => Episode {
                query: query.clone(),
                config: TeamConfiguration::PlannerEnhanced,
                dag: None,
                boundary: None,
                directives: Vec::new(),
                answer: Some(Self::degraded_answer("chat budget exhausted", &[])),
                trace_id: trace_id.clone(),
            },
            Err(e) => {
                self.trace.emit(
                    &trace_id,
                    "episode.error",
                    serde_json::json!({ "error": e.to_string() }),
                );
                return Err(e);
            }
        };
        self.trace.emit(
            &trace_id,
            "episode.end",
            serde_json::json!({
                "config": episode.config.to_string(),
                "degraded": episode.answer.as_ref().map(|a| a.degraded),
            }),
        );
        Ok(episode)
    }

    fn run_episode_inner(
        &self,
        query: &Query,
        trace_id: &str,
        gateway: &Gateway,
    ) -> Result<Episode, OrchestratorError> {
        let config = self.triage(query, gateway)?;
        self.trace.emit(
            trace_id,
            "triage",
            serde_json::json!({ "config": config.to_string() }),
        );

        match config {
            TeamConfiguration::WriterOnly => {
                let answer = synthesize(query, &[], &[], gateway)?;
                Ok(Episode {
                    query: query.clone(),
                    config,
                    dag: None,
                    boundary: None,
                    directives: Vec::new(),
                    answer: Some(answer),
                    trace_id: trace_id.to_string(),
                })
            }
            TeamConfiguration::ExecutorInclusive => {
                self.run_executor_inclusive(query, trace_id, gateway)
            }
            TeamConfiguration::PlannerEnhanced => {
                self.run_planner_enhanced(query, trace_id, gateway)
            }
        }
    }

    fn run_executor_inclusive(
        &self,
        query: &Query,
        trace_id: &str,
        gateway: &Gateway,
    ) -> Result<Episode, OrchestratorError> {
        let boundary = build_boundary(
            query,
            &self.registry,
            &self.scenes,
            gateway,
            self.options.alpha,
            self.options.boundary_cap,
        )?;

        let executor = Executor::new(self.registry.clone(), gateway.clone(), self.trace.clone());
        let (outputs, documents) = match boundary.top().cloned() {
            None => (Vec::new(), Vec::new()),
            Some(tool_id) => {
                let manifest = self.registry.manifest(&tool_id).map_err(|e| {
                    OrchestratorError::SketchParse(format!("boundary tool vanished: {e}"))
                })?;
                let schema_digest = serde_json::to_string(&manifest.input_schema)
                    .unwrap_or_default();
                let args_prompt = self.prompts.render(
                    "tool-args",
                    &[
                        ("query", query.text.as_str()),
                        ("tool", tool_id.as_str()),
                        ("schema", schema_digest.as_str()),
                    ],
                );
                let reply = gateway.ask("tool-args", &args_prompt)?;
                let args: Value = Self::extract_json(&reply.text)
                    .and_then(|j| serde_json::from_str(j).ok())
                    .unwrap_or_else(|| serde_json::json!({}));

                let mut task = SubTask::new("exec-1", query.text.clone()).with_tool(tool_id);
                if let Some(map) = args.as_object() {
                    for (name, value) in map {
                        task = task.with_slot(
                            name.clone(),
                            skein_core::SlotBinding::Literal(value.clone()),
                        );
                    }
                }
                let result = executor.execute_vertex(
                    trace_id,
                    &task,
                    &BTreeMap::new(),
                    &self.options.execution,
                );
                let single = TaskDag::new(
                    [{
                        let mut t = task.clone();
                        t.status = result.status.clone();
                        t.output = result.output.clone();
                        t
                    }],
                    [],
                )
                .expect("single vertex");
                (Self::done_outputs(&single), Self::collect_documents(&single))
            }
        };

        let answer = synthesize(query, &outputs, &documents, gateway)?;
        Ok(Episode {
            query: query.clone(),
            config: TeamConfiguration::ExecutorInclusive,
            dag: None,
            boundary: Some(boundary),
            directives: Vec::new(),
            answer: Some(answer),
            trace_id: trace_id.to_string(),
        })
    }

    fn run_planner_enhanced(
        &self,
        query: &Query,
        trace_id: &str,
        gateway: &Gateway,
    ) -> Result<Episode, OrchestratorError> {
        let boundary = build_boundary(
            query,
            &self.registry,
            &self.scenes,
            gateway,
            self.options.alpha,
            self.options.boundary_cap,
        )?;
        let mut dag = self.plan(query, &boundary, gateway)?;
        let executor = Executor::new(self.registry.clone(), gateway.clone(), self.trace.clone());

        let mut directives: Vec<Directive> = Vec::new();
        let mut replans = 0usize;
        let mut degraded_note: Option<String> = None;

        'episode: loop {
            let layer_plan = layers(&dag)?;
            let mut restart = false;
            for layer in &layer_plan {
                // Skip layers whose work is already complete (after a
                // replan the preserved prefix re-walks quickly).
                if layer.iter().all(|id| {
                    dag.vertex(id)
                        .map(|t| t.status.is_done())
                        .unwrap_or(false)
                }) {
                    continue;
                }
                let (next, results) =
                    executor.run_layer(trace_id, &dag, layer, &self.options.execution);
                dag = next;

                let directive = self.assess(query, &dag, &results, gateway)?;
                self.trace.emit(
                    trace_id,
                    "directive",
                    serde_json::json!({ "directive": directive.kind() }),
                );
                directives.push(directive.clone());

                match directive {
                    Directive::Continue => {}
                    Directive::Finalize => break 'episode,
                    replannable => {
                        if replans >= self.options.max_replans {
                            degraded_note =
                                Some("replan budget exhausted".to_string());
                            break 'episode;
                        }
                        replans += 1;
                        dag = self.replan(query, &dag, &replannable, &boundary, gateway)?;
                        restart = true;
                        break;
                    }
                }
            }
            if !restart {
                break;
            }
        }

        let outputs = Self::done_outputs(&dag);
        let documents = Self::collect_documents(&dag);
        let answer = match degraded_note {
            Some(note) => Self::degraded_answer(&note, &outputs),
            None => synthesize(query, &outputs, &documents, gateway)?,
        };

        Ok(Episode {
            query: query.clone(),
            config: TeamConfiguration::PlannerEnhanced,
            dag: Some(dag),
            boundary: Some(boundary),
            directives,
            answer: Some(answer),
            trace_id: trace_id.to_string(),
        })
    }
}
