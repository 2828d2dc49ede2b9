//! Canonical dag wire format.
//!
//! The planner's structured sketch, the trace store, and the HTTP surface
//! all exchange task graphs in one JSON shape:
//!
//! ```json
//! {
//!   "vertices": [
//!     {"id": "v1", "description": "...", "tool": "web-search",
//!      "args": {"query": "..."}, "ret_schema": "search-result"},
//!     {"id": "v3", "description": "...", "tool": "calculator",
//!      "args": {"a": {"$from": "v1"}, "op": "abs_diff"}, "ret_schema": "number"}
//!   ],
//!   "edges": [["v1", "v3"]]
//! }
//! ```
//!
//! Arg values are literals, except the marker object `{"$from": "<vertex>"}`
//! which declares an edge-fed slot, and `null` which leaves a slot unbound.
//! `tool` may be a string, `null`/absent for tool-free vertices, or (in
//! malformed sketches) an array — arrays with more than one entry are
//! reported as a `MultipleTools` violation by [`validate_wire`].

use crate::dag::{
    ArgSlot, DagError, SlotBinding, SubTask, TaskDag, ToolBinding, ToolId, Violation,
};
use crate::{ValidationReport, Value, VertexId, VertexStatus};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

pub const FROM_MARKER: &str = "$from";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireVertex {
    pub id: String,
    #[serde(default)]
    pub description: String,
    /// String tool id, null/absent for tool-free, or a malformed array.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub args: Option<BTreeMap<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ret_schema: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DagWire {
    pub vertices: Vec<WireVertex>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
}

impl DagWire {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("wire form serializes")
    }
}

fn wire_tools(vertex: &WireVertex) -> Vec<String> {
    match &vertex.tool {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::String(s)) => vec![s.clone()],
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .collect(),
        Some(other) => vec![other.to_string()],
    }
}

fn slot_binding(value: &Value) -> SlotBinding {
    if value.is_null() {
        return SlotBinding::Unbound;
    }
    if let Some(map) = value.as_object() {
        if map.len() == 1 {
            if let Some(Value::String(src)) = map.get(FROM_MARKER) {
                return SlotBinding::FromVertex(VertexId::new(src.clone()));
            }
        }
    }
    SlotBinding::Literal(value.clone())
}

/// Validates a sketch before it is turned into a [`TaskDag`]. Catches the
/// encoding-level problems a model-emitted sketch can contain (duplicate
/// ids, multiple tools, unknown endpoints, edge-fed slots with no edge,
/// cycles) and reports all of them.
pub fn validate_wire(wire: &DagWire) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut ids = BTreeSet::new();
    for v in &wire.vertices {
        if !ids.insert(v.id.clone()) {
            report
                .violations
                .push(Violation::DuplicateVertex { vertex: v.id.clone() });
        }
        let tools = wire_tools(v);
        if tools.len() > 1 {
            report.violations.push(Violation::MultipleTools {
                vertex: v.id.clone(),
                tools,
            });
        }
    }

    for (from, to) in &wire.edges {
        if !ids.contains(from) || !ids.contains(to) {
            report.violations.push(Violation::UnknownEdgeEndpoint {
                from: from.clone(),
                to: to.clone(),
            });
        }
    }

    for v in &wire.vertices {
        let Some(args) = &v.args else { continue };
        for (slot, value) in args {
            if let SlotBinding::FromVertex(src) = slot_binding(value) {
                if !ids.contains(src.as_str()) {
                    report.violations.push(Violation::UnknownSlotSource {
                        vertex: v.id.clone(),
                        slot: slot.clone(),
                        source: src.to_string(),
                    });
                } else if !wire
                    .edges
                    .iter()
                    .any(|(f, t)| f == src.as_str() && t == &v.id)
                {
                    report.violations.push(Violation::DanglingDependency {
                        vertex: v.id.clone(),
                        slot: slot.clone(),
                        source: src.to_string(),
                    });
                }
            }
        }
    }

    // Cycle check over ids only; reuse the dag machinery on a skeleton.
    if report.is_ok() {
        let skeleton = TaskDag::new(
            wire.vertices
                .iter()
                .map(|v| SubTask::new(v.id.as_str(), "")),
            wire.edges
                .iter()
                .map(|(f, t)| (VertexId::new(f.clone()), VertexId::new(t.clone()))),
        );
        if let Ok(skeleton) = skeleton {
            if let Err(DagError::CycleDetected(cycle)) = crate::topological_depths(&skeleton) {
                report.violations.push(Violation::Cycle {
                    members: cycle.iter().map(|v| v.to_string()).collect(),
                });
            }
        }
    }

    report
}

/// Converts a validated sketch into a fresh pending dag.
///
/// Returns the validation report instead when the sketch is malformed, so
/// callers can feed the violations back to the planner for repair.
pub fn dag_from_wire(wire: &DagWire) -> Result<TaskDag, ValidationReport> {
    let report = validate_wire(wire);
    if !report.is_ok() {
        return Err(report);
    }

    let vertices = wire.vertices.iter().map(|v| {
        let tools = wire_tools(v);
        let tool_binding = match tools.first() {
            Some(t) => ToolBinding::Tool(ToolId::new(t.clone())),
            None => ToolBinding::ToolFree,
        };
        let arg_slots = v
            .args
            .as_ref()
            .map(|args| {
                args.iter()
                    .map(|(name, value)| ArgSlot {
                        name: name.clone(),
                        schema: String::new(),
                        binding: slot_binding(value),
                    })
                    .collect()
            })
            .unwrap_or_default();
        SubTask {
            id: VertexId::new(v.id.clone()),
            description: v.description.clone(),
            arg_slots,
            ret_schema: v.ret_schema.clone().unwrap_or_default(),
            tool_binding,
            status: VertexStatus::Pending,
            attempts: 0,
            output: None,
        }
    });

    let dag = TaskDag::new(
        vertices,
        wire.edges
            .iter()
            .map(|(f, t)| (VertexId::new(f.clone()), VertexId::new(t.clone()))),
    )
    .expect("duplicate ids caught by validate_wire");
    Ok(dag)
}

/// Converts wire vertices into fresh sub-tasks without structural
/// validation, reporting only encoding-level problems (multiple tools,
/// duplicate ids). Used when a sketch describes a *fragment* whose edges
/// and slot feeds reference vertices that live outside the fragment; the
/// caller validates the merged graph instead.
pub fn subtasks_from_wire(wire: &DagWire) -> (Vec<SubTask>, Vec<Violation>) {
    let mut violations = Vec::new();
    let mut seen = BTreeSet::new();
    let mut tasks = Vec::new();
    for v in &wire.vertices {
        if !seen.insert(v.id.clone()) {
            violations.push(Violation::DuplicateVertex { vertex: v.id.clone() });
            continue;
        }
        let tools = wire_tools(v);
        if tools.len() > 1 {
            violations.push(Violation::MultipleTools {
                vertex: v.id.clone(),
                tools: tools.clone(),
            });
        }
        let tool_binding = match tools.first() {
            Some(t) => ToolBinding::Tool(ToolId::new(t.clone())),
            None => ToolBinding::ToolFree,
        };
        let arg_slots = v
            .args
            .as_ref()
            .map(|args| {
                args.iter()
                    .map(|(name, value)| ArgSlot {
                        name: name.clone(),
                        schema: String::new(),
                        binding: slot_binding(value),
                    })
                    .collect()
            })
            .unwrap_or_default();
        tasks.push(SubTask {
            id: VertexId::new(v.id.clone()),
            description: v.description.clone(),
            arg_slots,
            ret_schema: v.ret_schema.clone().unwrap_or_default(),
            tool_binding,
            status: VertexStatus::Pending,
            attempts: 0,
            output: None,
        });
    }
    (tasks, violations)
}

/// Renders a dag back into the canonical wire shape. Statuses and outputs
/// are runtime state and are not part of the wire form.
pub fn dag_to_wire(dag: &TaskDag) -> DagWire {
    let vertices = dag
        .vertices
        .values()
        .map(|task| {
            let args: BTreeMap<String, Value> = task
                .arg_slots
                .iter()
                .map(|slot| {
                    let value = match &slot.binding {
                        SlotBinding::Unbound => Value::Null,
                        SlotBinding::Literal(v) => v.clone(),
                        SlotBinding::FromVertex(src) => {
                            serde_json::json!({ FROM_MARKER: src.as_str() })
                        }
                    };
                    (slot.name.clone(), value)
                })
                .collect();
            WireVertex {
                id: task.id.to_string(),
                description: task.description.clone(),
                tool: task
                    .tool_binding
                    .tool_id()
                    .map(|t| Value::String(t.to_string())),
                args: if args.is_empty() { None } else { Some(args) },
                ret_schema: if task.ret_schema.is_empty() {
                    None
                } else {
                    Some(task.ret_schema.clone())
                },
            }
        })
        .collect();
    DagWire {
        vertices,
        edges: dag
            .edges
            .iter()
            .map(|(f, t)| (f.to_string(), t.to_string()))
            .collect(),
    }
}
