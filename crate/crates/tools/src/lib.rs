//! Tool platform: manifests, discovery, the JSON-RPC execution contract,
//! documentation refinement, toolkit clustering, and intra-toolkit
//! fallback.
//!
//! Tools advertise themselves through a [`ToolManifest`] — name, semantic
//! role, cost, latency bounds, typed input/output schemas, and an endpoint
//! that is either a builtin stub (for tests and local corpora) or a remote
//! JSON-RPC server. The registry owns the manifests, serializes writes, and
//! appends every invocation to the audit trace.

pub mod bleu;
pub mod kmeans;
pub mod refine;
pub mod registry;
pub mod rpc;
pub mod schema;
pub mod stubs;

pub use bleu::bleu;
pub use kmeans::{kmeans, KmeansOutcome};
pub use refine::{
    diversity_gate, termination_delta, ExplorationRecord, RefineOptions, RefineOutcome,
};
pub use registry::{DiscoverFilter, RegisteredTool, ToolRegistry, Toolkit};
pub use schema::{FieldSpec, SchemaKind, ToolSchema};

use serde::{Deserialize, Serialize};
use skein_core::ToolId;
use thiserror::Error;

/// Tool documentation with its revision history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolDoc {
    pub current: String,
    /// Prior versions, oldest first. `history.len() == revision`.
    #[serde(default)]
    pub history: Vec<String>,
    #[serde(default)]
    pub revision: usize,
}

impl ToolDoc {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            current: text.into(),
            history: Vec::new(),
            revision: 0,
        }
    }

    /// Records an accepted rewrite.
    pub fn accept_rewrite(&mut self, next: String) {
        self.history.push(std::mem::replace(&mut self.current, next));
        self.revision += 1;
    }
}

/// Where invocations of a tool are dispatched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    /// In-process stub, looked up by tag ("weather", "calculator",
    /// "web-search", "echo", "broken", "stall").
    Builtin(String),
    /// Remote JSON-RPC 2.0 server.
    Http(String),
}

/// Advertised description of one tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolManifest {
    pub tool_id: ToolId,
    pub name: String,
    /// Functional role, e.g. "search", "weather", "compute".
    pub semantic_role: String,
    /// Abstract cost units per call.
    pub cost: f64,
    /// (min_ms, max_ms); invocations beyond max_ms are unresponsive.
    pub latency_bounds: (u64, u64),
    pub input_schema: ToolSchema,
    pub output_schema: ToolSchema,
    pub endpoint: Endpoint,
    pub documentation: ToolDoc,
}

impl ToolManifest {
    pub fn validate(&self) -> Result<(), ToolError> {
        if self.tool_id.as_str().is_empty() {
            return Err(ToolError::InvalidManifest("empty tool_id".into()));
        }
        let (min_ms, max_ms) = self.latency_bounds;
        if min_ms > max_ms {
            return Err(ToolError::InvalidManifest(format!(
                "latency bounds inverted: min {min_ms} > max {max_ms}"
            )));
        }
        if self.cost < 0.0 {
            return Err(ToolError::InvalidManifest("negative cost".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ToolError {
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("duplicate tool id {0}")]
    DuplicateId(ToolId),
    #[error("unknown tool {0}")]
    UnknownTool(ToolId),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("tool {tool} unresponsive after {timeout_ms} ms")]
    ToolUnresponsive { tool: ToolId, timeout_ms: u64 },
    #[error("remote fault from {tool}: {message}")]
    RemoteFault { tool: ToolId, message: String },
    #[error("tool {0} is not assigned to a toolkit")]
    ToolkitNotAssigned(ToolId),
    #[error("k must be in 1..={max}, got {k}")]
    KOutOfRange { k: usize, max: usize },
    #[error("input must be non-empty")]
    EmptyInput,
    #[error("gateway error: {0}")]
    Gateway(#[from] skein_gateway::GatewayError),
}
