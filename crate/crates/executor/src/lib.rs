//! Layer-by-layer execution of a task graph.
//!
//! Vertices of one layer run concurrently up to a configurable cap; their
//! outputs propagate along edges into downstream argument slots at the
//! layer barrier. Each vertex loops tool invocation and a sufficiency
//! check up to its call budget, switching to functionally equivalent
//! toolkit members when the bound tool fails. Failures never raise: they
//! become vertex status data, the run halts at the failed layer (in-flight
//! siblings finish), and control returns to the caller for re-planning.

use serde::{Deserialize, Serialize};
use skein_core::parallel::par_map;
use skein_core::{
    topological_depths, DagError, SubTask, TaskDag, ToolBinding, TraceLog, Value, VertexId,
    VertexStatus,
};
use skein_gateway::Gateway;
use skein_tools::{ToolError, ToolRegistry};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Execution limits for one dag run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecutionBudget {
    /// Invocation-plus-sufficiency rounds per vertex.
    pub max_tool_calls_per_vertex: u32,
    /// Hard cap on a single tool call, combined with the manifest's
    /// latency bound (the tighter wins).
    pub per_call_timeout_ms: u64,
    /// Concurrent vertices within one layer.
    pub max_parallelism: usize,
}

impl Default for ExecutionBudget {
    fn default() -> Self {
        Self {
            max_tool_calls_per_vertex: 3,
            per_call_timeout_ms: 10_000,
            max_parallelism: 8,
        }
    }
}

impl ExecutionBudget {
    pub fn validate(&self) -> Result<(), DagError> {
        // All fields must be positive; zero parallelism or budget would
        // deadlock a run before it starts.
        assert!(self.max_tool_calls_per_vertex > 0);
        assert!(self.per_call_timeout_ms > 0);
        assert!(self.max_parallelism > 0);
        Ok(())
    }
}

/// Result of one vertex execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexResult {
    pub id: VertexId,
    pub status: VertexStatus,
    pub output: Option<Value>,
}

/// Outcome of a (possibly partial) dag run.
#[derive(Debug, Clone, PartialEq)]
pub struct DagRunResult {
    /// New dag version with updated statuses and outputs.
    pub dag: TaskDag,
    /// Per-layer results in execution order.
    pub layer_results: Vec<Vec<VertexResult>>,
    /// Layer index at which execution stopped early, if any vertex failed.
    pub halted_layer: Option<usize>,
}

impl DagRunResult {
    pub fn all_done(&self) -> bool {
        self.halted_layer.is_none()
            && self.dag.vertices.values().all(|v| v.status.is_done())
    }
}

/// Vertex-id layers ordered by topological depth; ids sort within a layer.
pub fn layers(dag: &TaskDag) -> Result<Vec<Vec<VertexId>>, DagError> {
    let depths = topological_depths(dag)?;
    let max_depth = depths.values().copied().max().unwrap_or(0);
    let mut out = vec![Vec::new(); if dag.vertices.is_empty() { 0 } else { max_depth + 1 }];
    for (id, depth) in depths {
        out[depth].push(id);
    }
    for layer in &mut out {
        layer.sort();
    }
    Ok(out)
}

pub struct Executor {
    registry: Arc<ToolRegistry>,
    gateway: Gateway,
    trace: Arc<TraceLog>,
}

impl Executor {
    pub fn new(registry: Arc<ToolRegistry>, gateway: Gateway, trace: Arc<TraceLog>) -> Self {
        Self {
            registry,
            gateway,
            trace,
        }
    }

    /// Executes one sub-task: resolve arguments, invoke the bound tool (or
    /// run tool-free), judge sufficiency, repeat within budget, falling
    /// back to toolkit siblings on tool failure. All failure modes land in
    /// the returned status.
    pub fn execute_vertex(
        &self,
        trace_id: &str,
        task: &SubTask,
        inputs: &BTreeMap<String, Value>,
        budget: &ExecutionBudget,
    ) -> VertexResult {
        self.trace.emit(
            trace_id,
            "vertex.start",
            serde_json::json!({ "vertex": task.id.as_str() }),
        );
        let result = self.execute_vertex_inner(trace_id, task, inputs, budget);
        self.trace.emit(
            trace_id,
            "vertex.end",
            serde_json::json!({
                "vertex": task.id.as_str(),
                "status": format!("{:?}", result.status),
            }),
        );
        result
    }

    fn execute_vertex_inner(
        &self,
        trace_id: &str,
        task: &SubTask,
        inputs: &BTreeMap<String, Value>,
        budget: &ExecutionBudget,
    ) -> VertexResult {
        let fail = |reason: String| VertexResult {
            id: task.id.clone(),
            status: VertexStatus::Failed { reason },
            output: None,
        };

        // Resolve argument slots to concrete values.
        let mut args = serde_json::Map::new();
        for slot in &task.arg_slots {
            let value = match &slot.binding {
                skein_core::SlotBinding::Literal(v) => v.clone(),
                skein_core::SlotBinding::FromVertex(_) | skein_core::SlotBinding::Unbound => {
                    match inputs.get(&slot.name) {
                        Some(v) => v.clone(),
                        None => {
                            return fail(format!("slot {:?} has no bound value", slot.name))
                        }
                    }
                }
            };
            args.insert(slot.name.clone(), value);
        }
        let args = Value::Object(args);

        let mut round_outputs: Vec<Value> = Vec::new();
        for round in 1..=budget.max_tool_calls_per_vertex {
            let output = match &task.tool_binding {
                ToolBinding::ToolFree => {
                    let reply = self.gateway.ask(
                        "toolfree-exec",
                        format!(
                            "Sub-task: {}\nArguments: {args}\nCarry out the sub-task and reply with the result.",
                            task.description
                        ),
                    );
                    match reply {
                        Ok(r) => serde_json::json!({ "text": r.text }),
                        Err(e) => return fail(format!("tool-free execution failed: {e}")),
                    }
                }
                ToolBinding::Tool(primary) => {
                    match self.invoke_with_fallback(trace_id, primary, &args, budget) {
                        Ok(v) => v,
                        Err(e) => return fail(e),
                    }
                }
            };
            round_outputs.push(output);

            match self.sufficient(trace_id, task, &round_outputs) {
                Ok(true) => {
                    return VertexResult {
                        id: task.id.clone(),
                        status: VertexStatus::Done,
                        output: Some(self.merge_rounds(&round_outputs)),
                    };
                }
                Ok(false) => {
                    let _ = round; // next round re-invokes
                }
                Err(e) => return fail(format!("sufficiency check failed: {e}")),
            }
        }
        fail("insufficient".to_string())
    }

    /// Primary first, then toolkit siblings in similarity order.
    fn invoke_with_fallback(
        &self,
        trace_id: &str,
        primary: &skein_core::ToolId,
        args: &Value,
        budget: &ExecutionBudget,
    ) -> Result<Value, String> {
        let mut last_error: Option<ToolError> = None;
        let mut candidates = vec![primary.clone()];
        match self.registry.fallback_candidates(primary, &self.gateway) {
            Ok(fallbacks) => candidates.extend(fallbacks),
            // No toolkit assigned: the primary stands alone.
            Err(ToolError::ToolkitNotAssigned(_)) => {}
            Err(e) => return Err(format!("fallback lookup failed: {e}")),
        }

        for (i, candidate) in candidates.iter().enumerate() {
            if i > 0 {
                self.trace.emit(
                    trace_id,
                    "tool.fallback",
                    serde_json::json!({
                        "from": primary.as_str(),
                        "to": candidate.as_str(),
                    }),
                );
            }
            match self.registry.invoke_with_timeout(
                candidate,
                args,
                Some(budget.per_call_timeout_ms),
            ) {
                Ok(output) => return Ok(output),
                Err(e) => last_error = Some(e),
            }
        }
        Err(format!(
            "all tools exhausted, last error: {}",
            last_error.map(|e| e.to_string()).unwrap_or_default()
        ))
    }

    /// One sufficiency judgment over the accumulated round outputs. The
    /// checker must answer SUFFICIENT or INSUFFICIENT; anything else
    /// counts as insufficient and the loop spends another round.
    fn sufficient(
        &self,
        trace_id: &str,
        task: &SubTask,
        rounds: &[Value],
    ) -> Result<bool, skein_gateway::GatewayError> {
        let reply = self.gateway.ask(
            "sufficiency",
            format!(
                "Sub-task: {}\nAccumulated outputs: {}\nDo these outputs sufficiently support the factual or contextual requirements of the sub-task? Answer SUFFICIENT or INSUFFICIENT: <reason>.",
                task.description,
                Value::Array(rounds.to_vec())
            ),
        )?;
        let verdict = reply.text.trim().to_ascii_uppercase();
        let sufficient = verdict.starts_with("SUFFICIENT");
        self.trace.emit(
            trace_id,
            "sufficiency",
            serde_json::json!({
                "vertex": task.id.as_str(),
                "verdict": if sufficient { "sufficient" } else { "insufficient" },
            }),
        );
        Ok(sufficient)
    }

    /// Single rounds pass through verbatim; multi-round outputs accumulate
    /// under "rounds" with a model-written digest (joined text fallback).
    fn merge_rounds(&self, rounds: &[Value]) -> Value {
        if rounds.len() == 1 {
            return rounds[0].clone();
        }
        let digest = self
            .gateway
            .ask(
                "digest",
                format!(
                    "Summarize these tool outputs in one sentence: {}",
                    Value::Array(rounds.to_vec())
                ),
            )
            .map(|r| r.text)
            .unwrap_or_else(|_| {
                rounds
                    .iter()
                    .map(|r| r.to_string())
                    .collect::<Vec<_>>()
                    .join("; ")
            });
        serde_json::json!({ "rounds": rounds, "digest": digest })
    }

    /// Executes every pending vertex of one layer (parents must be Done),
    /// returning the updated dag and per-vertex results.
    pub fn run_layer(
        &self,
        trace_id: &str,
        dag: &TaskDag,
        layer: &[VertexId],
        budget: &ExecutionBudget,
    ) -> (TaskDag, Vec<VertexResult>) {
        // Resolve inputs before going parallel: upstream outputs feed
        // edge-fed slots; unbound slots accept an upstream output when
        // exactly one parent provides one.
        let mut jobs: Vec<(SubTask, BTreeMap<String, Value>)> = Vec::new();
        let mut results: Vec<VertexResult> = Vec::new();
        for id in layer {
            let Some(task) = dag.vertex(id) else { continue };
            match task.status {
                VertexStatus::Done => {
                    // Preserved from an earlier run (e.g. across a replan).
                    results.push(VertexResult {
                        id: id.clone(),
                        status: VertexStatus::Done,
                        output: task.output.clone(),
                    });
                    continue;
                }
                VertexStatus::Pending => {}
                _ => continue,
            }
            let parents_done = dag
                .parents(id)
                .iter()
                .all(|p| dag.vertex(p).map(|t| t.status.is_done()).unwrap_or(false));
            if !parents_done {
                continue; // stays pending; upstream failed or is unscheduled
            }

            let mut inputs = BTreeMap::new();
            for slot in &task.arg_slots {
                if let skein_core::SlotBinding::FromVertex(src) = &slot.binding {
                    if let Some(value) = dag.vertex(src).and_then(|t| t.output.clone()) {
                        inputs.insert(slot.name.clone(), value);
                    }
                }
            }
            jobs.push((task.clone(), inputs));
        }

        let executed: Vec<VertexResult> = par_map(budget.max_parallelism, &jobs, |(task, inputs)| {
            self.execute_vertex(trace_id, task, inputs, budget)
        });

        let mut next = dag.clone();
        for result in &executed {
            if let Some(task) = next.vertices.get_mut(&result.id) {
                task.status = result.status.clone();
                task.output = result.output.clone();
                task.attempts += 1;
            }
        }
        results.extend(executed);
        (next, results)
    }

    /// Runs the whole dag layer by layer, stopping early at the first
    /// layer containing a failed vertex.
    pub fn run_dag(
        &self,
        trace_id: &str,
        dag: &TaskDag,
        budget: &ExecutionBudget,
    ) -> Result<DagRunResult, DagError> {
        budget.validate()?;
        let layer_plan = layers(dag)?;
        let mut current = dag.clone();
        let mut layer_results = Vec::new();
        let mut halted_layer = None;

        for (depth, layer) in layer_plan.iter().enumerate() {
            let (next, results) = self.run_layer(trace_id, &current, layer, budget);
            current = next;
            let failed = results.iter().any(|r| r.status.is_failed());
            layer_results.push(results);
            if failed {
                halted_layer = Some(depth);
                break;
            }
        }

        Ok(DagRunResult {
            dag: current,
            layer_results,
            halted_layer,
        })
    }
}
