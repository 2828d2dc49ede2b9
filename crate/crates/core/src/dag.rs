//! Task graphs: vertices with interface signatures and tool bindings,
//! dependency edges, and depth computation for layered scheduling.

use crate::Value;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use thiserror::Error;

/// Identifier of a task-graph vertex. Caller-supplied so fixtures stay
/// human-readable; duplicates are rejected at construction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub String);

impl VertexId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VertexId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

impl From<String> for VertexId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// Identifier of a registered tool.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ToolId(pub String);

impl ToolId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ToolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ToolId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

impl From<String> for ToolId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// Binding state of one named parameter slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SlotBinding {
    /// Not yet bound; must be filled before execution.
    Unbound,
    /// A literal value fixed at planning time.
    Literal(Value),
    /// Fed by the return value of an upstream vertex along an edge.
    FromVertex(VertexId),
}

/// A named parameter slot with a schema reference and binding state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgSlot {
    pub name: String,
    /// Free-form schema reference, e.g. "string" or "search-result".
    #[serde(default)]
    pub schema: String,
    pub binding: SlotBinding,
}

/// Tool binding of a vertex: at most one tool, or tool-free local execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ToolBinding {
    ToolFree,
    Tool(ToolId),
}

impl ToolBinding {
    pub fn tool_id(&self) -> Option<&ToolId> {
        match self {
            ToolBinding::Tool(id) => Some(id),
            ToolBinding::ToolFree => None,
        }
    }
}

/// Execution status of a vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexStatus {
    Pending,
    Running,
    Done,
    Failed { reason: String },
}

impl VertexStatus {
    pub fn is_done(&self) -> bool {
        matches!(self, VertexStatus::Done)
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, VertexStatus::Failed { .. })
    }
}

/// An atomic, schedulable sub-task: one vertex of the task graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubTask {
    pub id: VertexId,
    pub description: String,
    #[serde(default)]
    pub arg_slots: Vec<ArgSlot>,
    /// Schema reference for the returned data.
    #[serde(default)]
    pub ret_schema: String,
    pub tool_binding: ToolBinding,
    pub status: VertexStatus,
    #[serde(default)]
    pub attempts: u32,
    #[serde(default)]
    pub output: Option<Value>,
}

impl SubTask {
    /// A fresh pending sub-task with no slots.
    pub fn new(id: impl Into<VertexId>, description: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            arg_slots: Vec::new(),
            ret_schema: String::new(),
            tool_binding: ToolBinding::ToolFree,
            status: VertexStatus::Pending,
            attempts: 0,
            output: None,
        }
    }

    pub fn with_tool(mut self, tool: impl Into<ToolId>) -> Self {
        self.tool_binding = ToolBinding::Tool(tool.into());
        self
    }

    pub fn with_slot(mut self, name: impl Into<String>, binding: SlotBinding) -> Self {
        self.arg_slots.push(ArgSlot {
            name: name.into(),
            schema: String::new(),
            binding,
        });
        self
    }

    /// Vertices this sub-task's slots are fed from.
    pub fn upstream_slots(&self) -> impl Iterator<Item = (&str, &VertexId)> {
        self.arg_slots.iter().filter_map(|s| match &s.binding {
            SlotBinding::FromVertex(v) => Some((s.name.as_str(), v)),
            _ => None,
        })
    }
}

/// A directed acyclic task graph. Vertices are keyed by id; edges are
/// (from, to) dependency pairs meaning `to` consumes the output of `from`.
///
/// Construction rejects duplicate vertex ids only; structural problems
/// (dangling edges, cycles, unmatched slot feeds) are surfaced by
/// [`validate_dag`] as a report and by [`topological_depths`] as errors, so
/// that planner output can be inspected rather than silently dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDag {
    pub vertices: BTreeMap<VertexId, SubTask>,
    pub edges: Vec<(VertexId, VertexId)>,
}

impl TaskDag {
    pub fn new(
        vertices: impl IntoIterator<Item = SubTask>,
        edges: impl IntoIterator<Item = (VertexId, VertexId)>,
    ) -> Result<Self, DagError> {
        let mut map = BTreeMap::new();
        for v in vertices {
            let id = v.id.clone();
            if map.insert(id.clone(), v).is_some() {
                return Err(DagError::DuplicateVertex(id));
            }
        }
        Ok(Self {
            vertices: map,
            edges: edges.into_iter().collect(),
        })
    }

    pub fn empty() -> Self {
        Self {
            vertices: BTreeMap::new(),
            edges: Vec::new(),
        }
    }

    pub fn vertex(&self, id: &VertexId) -> Option<&SubTask> {
        self.vertices.get(id)
    }

    /// Direct parents of `id`, in edge-declaration order.
    pub fn parents(&self, id: &VertexId) -> Vec<&VertexId> {
        self.edges
            .iter()
            .filter(|(_, to)| to == id)
            .map(|(from, _)| from)
            .collect()
    }

    /// Direct children of `id`, in edge-declaration order.
    pub fn children(&self, id: &VertexId) -> Vec<&VertexId> {
        self.edges
            .iter()
            .filter(|(from, _)| from == id)
            .map(|(_, to)| to)
            .collect()
    }

    /// `id` plus every vertex reachable from it along edges.
    pub fn descendants_including(&self, id: &VertexId) -> BTreeSet<VertexId> {
        let mut out = BTreeSet::new();
        let mut queue = VecDeque::new();
        queue.push_back(id.clone());
        while let Some(v) = queue.pop_front() {
            if out.insert(v.clone()) {
                for child in self.children(&v) {
                    queue.push_back(child.clone());
                }
            }
        }
        out
    }

    /// New dag with one vertex replaced by an updated version.
    pub fn with_vertex(&self, task: SubTask) -> Self {
        let mut next = self.clone();
        next.vertices.insert(task.id.clone(), task);
        next
    }
}

/// Errors from dag construction and depth computation.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum DagError {
    #[error("duplicate vertex id {0}")]
    DuplicateVertex(VertexId),
    #[error("edge references unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("cycle detected: {}", format_cycle(.0))]
    CycleDetected(Vec<VertexId>),
}

fn format_cycle(cycle: &[VertexId]) -> String {
    cycle
        .iter()
        .map(VertexId::as_str)
        .collect::<Vec<_>>()
        .join(" -> ")
}

/// Topological depth of every vertex: sources sit at 0, every other vertex
/// one past its deepest parent. Fails with one offending cycle listed when
/// the graph is not acyclic.
pub fn topological_depths(dag: &TaskDag) -> Result<BTreeMap<VertexId, usize>, DagError> {
    for (from, to) in &dag.edges {
        for v in [from, to] {
            if !dag.vertices.contains_key(v) {
                return Err(DagError::UnknownVertex(v.clone()));
            }
        }
    }

    let mut indegree: BTreeMap<&VertexId, usize> =
        dag.vertices.keys().map(|id| (id, 0usize)).collect();
    for (_, to) in &dag.edges {
        *indegree.get_mut(to).expect("endpoint checked") += 1;
    }

    let mut depths: BTreeMap<VertexId, usize> = BTreeMap::new();
    let mut ready: VecDeque<&VertexId> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(id, _)| *id)
        .collect();
    for id in &ready {
        depths.insert((*id).clone(), 0);
    }

    while let Some(v) = ready.pop_front() {
        let depth = depths[v];
        for (from, to) in &dag.edges {
            if from != v {
                continue;
            }
            let entry = depths.entry(to.clone()).or_insert(0);
            *entry = (*entry).max(depth + 1);
            let d = indegree.get_mut(to).expect("endpoint checked");
            *d -= 1;
            if *d == 0 {
                ready.push_back(to);
            }
        }
    }

    if depths.len() < dag.vertices.len() {
        return Err(DagError::CycleDetected(find_cycle(dag, &depths)));
    }
    Ok(depths)
}

/// Walks the unresolved region of the graph to exhibit one concrete cycle.
fn find_cycle(dag: &TaskDag, resolved: &BTreeMap<VertexId, usize>) -> Vec<VertexId> {
    let stuck: BTreeSet<&VertexId> = dag
        .vertices
        .keys()
        .filter(|id| !resolved.contains_key(*id))
        .collect();
    let start = match stuck.iter().next() {
        Some(v) => (*v).clone(),
        None => return Vec::new(),
    };

    // Follow in-cycle successors until a vertex repeats.
    let mut path = vec![start.clone()];
    let mut seen: BTreeMap<VertexId, usize> = BTreeMap::new();
    seen.insert(start.clone(), 0);
    let mut current = start;
    loop {
        let next = dag
            .children(&current)
            .into_iter()
            .find(|c| stuck.contains(c))
            .cloned();
        let Some(next) = next else {
            return path;
        };
        if let Some(&pos) = seen.get(&next) {
            path.push(next);
            return path[pos..].to_vec();
        }
        seen.insert(next.clone(), path.len());
        path.push(next.clone());
        current = next;
    }
}

/// One violated invariant found by [`validate_dag`] or
/// [`crate::wire::validate_wire`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    /// An edge endpoint names a vertex that does not exist.
    UnknownEdgeEndpoint { from: String, to: String },
    /// The graph contains a cycle.
    Cycle { members: Vec<String> },
    /// An edge-fed arg slot names an upstream vertex that does not exist.
    UnknownSlotSource { vertex: String, slot: String, source: String },
    /// An edge-fed arg slot has no matching dependency edge.
    DanglingDependency { vertex: String, slot: String, source: String },
    /// A vertex encodes more than one tool binding.
    MultipleTools { vertex: String, tools: Vec<String> },
    /// Two vertices share an id.
    DuplicateVertex { vertex: String },
    /// A vertex is marked Done but carries no output.
    DoneWithoutOutput { vertex: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownEdgeEndpoint { from, to } => {
                write!(f, "edge ({from}, {to}) references an unknown vertex")
            }
            Violation::Cycle { members } => write!(f, "cycle through {}", members.join(" -> ")),
            Violation::UnknownSlotSource { vertex, slot, source } => write!(
                f,
                "slot {slot} of {vertex} is fed by unknown vertex {source}"
            ),
            Violation::DanglingDependency { vertex, slot, source } => write!(
                f,
                "dangling dependency: slot {slot} of {vertex} is fed by {source} but no edge ({source}, {vertex}) exists"
            ),
            Violation::MultipleTools { vertex, tools } => write!(
                f,
                "multiple tools bound to {vertex}: {}",
                tools.join(", ")
            ),
            Violation::DuplicateVertex { vertex } => write!(f, "duplicate vertex id {vertex}"),
            Violation::DoneWithoutOutput { vertex } => {
                write!(f, "vertex {vertex} is Done but has no output")
            }
        }
    }
}

/// Outcome of validation: empty iff the graph is well-formed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every structural invariant of a constructed dag and reports all
/// violations rather than stopping at the first.
pub fn validate_dag(dag: &TaskDag) -> ValidationReport {
    let mut report = ValidationReport::default();

    for (from, to) in &dag.edges {
        if !dag.vertices.contains_key(from) || !dag.vertices.contains_key(to) {
            report.violations.push(Violation::UnknownEdgeEndpoint {
                from: from.to_string(),
                to: to.to_string(),
            });
        }
    }

    if let Err(DagError::CycleDetected(cycle)) = topological_depths(dag) {
        report.violations.push(Violation::Cycle {
            members: cycle.iter().map(|v| v.to_string()).collect(),
        });
    }

    for (id, task) in &dag.vertices {
        for (slot, source) in task.upstream_slots() {
            if !dag.vertices.contains_key(source) {
                report.violations.push(Violation::UnknownSlotSource {
                    vertex: id.to_string(),
                    slot: slot.to_string(),
                    source: source.to_string(),
                });
            } else if !dag.edges.iter().any(|(f, t)| f == source && t == id) {
                report.violations.push(Violation::DanglingDependency {
                    vertex: id.to_string(),
                    slot: slot.to_string(),
                    source: source.to_string(),
                });
            }
        }
        if task.status.is_done() && task.output.is_none() {
            report.violations.push(Violation::DoneWithoutOutput {
                vertex: id.to_string(),
            });
        }
    }

    report
}
