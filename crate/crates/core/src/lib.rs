//! Shared domain types for the skein search engine.
//!
//! Everything downstream — the model gateway, tool platform, planner,
//! executor, writer — builds on the types in this crate: queries and
//! conversation turns, task graphs with tool bindings, retrievable
//! documents, ranked lists, re-action directives, and the trace event
//! stream. All types are immutable values once constructed; updates
//! produce new versions.

pub mod dag;
pub mod directive;
pub mod document;
pub mod parallel;
pub mod query;
pub mod rng;
pub mod trace;
pub mod wire;

pub use dag::{
    topological_depths, validate_dag, ArgSlot, DagError, SlotBinding, SubTask, TaskDag,
    ToolBinding, ToolId, ValidationReport, VertexId, VertexStatus, Violation,
};
pub use directive::Directive;
pub use document::{DocId, DocMetadata, Document, RankedList};
pub use query::{Query, TeamConfiguration, Turn};
pub use trace::{TraceEvent, TraceLog};
pub use wire::{
    dag_from_wire, dag_to_wire, subtasks_from_wire, validate_wire, DagWire, WireVertex,
};

/// Structured values carried between sub-tasks: a self-describing tree of
/// null / bool / number / string / list / map, matching the JSON execution
/// contract on the tool wire.
pub type Value = serde_json::Value;
