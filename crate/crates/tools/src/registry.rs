//! Tool registry: discovery handshake, the idempotent execution contract
//! with auditing and timeouts, toolkit assignment, and fallback ordering.

use crate::stubs::StubHost;
use crate::{rpc, Endpoint, ToolDoc, ToolError, ToolManifest};
use serde::{Deserialize, Serialize};
use skein_core::{TraceLog, ToolId, Value};
use skein_gateway::{cosine, Embedding, Gateway};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::mpsc;
use std::sync::{Arc, RwLock};
use std::time::Duration;

/// A functional cluster of tools used for fallback substitution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Toolkit {
    pub toolkit_id: String,
    pub member_tool_ids: BTreeSet<ToolId>,
    pub centroid: Vec<f32>,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct RegisteredTool {
    pub manifest: ToolManifest,
    /// Toolkit this tool belongs to, set by `assign_toolkits`.
    pub toolkit_id: Option<String>,
}

/// Predicate for `discover`: all present fields must match.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscoverFilter {
    /// Case-insensitive equality on `semantic_role`.
    #[serde(default)]
    pub role: Option<String>,
    /// Substring match on the tool name.
    #[serde(default)]
    pub name_contains: Option<String>,
}

impl DiscoverFilter {
    pub fn by_role(role: impl Into<String>) -> Self {
        Self {
            role: Some(role.into()),
            name_contains: None,
        }
    }

    fn matches(&self, manifest: &ToolManifest) -> bool {
        if let Some(role) = &self.role {
            if !manifest.semantic_role.eq_ignore_ascii_case(role) {
                return false;
            }
        }
        if let Some(needle) = &self.name_contains {
            if !manifest.name.to_lowercase().contains(&needle.to_lowercase()) {
                return false;
            }
        }
        true
    }
}

/// Registry of tools. Reads are concurrent; writes (register, refine,
/// toolkit assignment) serialize behind the lock. Invocations run against
/// a snapshot of the manifest so they never hold the lock.
pub struct ToolRegistry {
    tools: RwLock<BTreeMap<ToolId, RegisteredTool>>,
    toolkits: RwLock<Vec<Toolkit>>,
    stubs: Arc<StubHost>,
    audit: Arc<TraceLog>,
}

impl ToolRegistry {
    pub fn new(stubs: StubHost, audit: Arc<TraceLog>) -> Self {
        Self {
            tools: RwLock::new(BTreeMap::new()),
            toolkits: RwLock::new(Vec::new()),
            stubs: Arc::new(stubs),
            audit,
        }
    }

    /// Registers a tool, making it discoverable with its documentation at
    /// revision 0.
    pub fn register(&self, manifest: ToolManifest) -> Result<ToolId, ToolError> {
        manifest.validate()?;
        let mut tools = self.tools.write().expect("registry lock");
        let id = manifest.tool_id.clone();
        if tools.contains_key(&id) {
            return Err(ToolError::DuplicateId(id));
        }
        tools.insert(
            id.clone(),
            RegisteredTool {
                manifest,
                toolkit_id: None,
            },
        );
        self.audit.emit(
            "registry",
            "tool.register",
            serde_json::json!({ "tool": id.as_str() }),
        );
        Ok(id)
    }

    /// Loads a JSON array of manifests.
    pub fn register_all_json(&self, text: &str) -> Result<Vec<ToolId>, ToolError> {
        let manifests: Vec<ToolManifest> = serde_json::from_str(text)
            .map_err(|e| ToolError::InvalidManifest(e.to_string()))?;
        manifests.into_iter().map(|m| self.register(m)).collect()
    }

    /// All manifests matching the filter, ordered by (cost asc, name).
    pub fn discover(&self, filter: &DiscoverFilter) -> Vec<ToolManifest> {
        let tools = self.tools.read().expect("registry lock");
        let mut hits: Vec<ToolManifest> = tools
            .values()
            .filter(|t| filter.matches(&t.manifest))
            .map(|t| t.manifest.clone())
            .collect();
        hits.sort_by(|a, b| {
            a.cost
                .partial_cmp(&b.cost)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.name.cmp(&b.name))
        });
        hits
    }

    pub fn manifest(&self, id: &ToolId) -> Result<ToolManifest, ToolError> {
        let tools = self.tools.read().expect("registry lock");
        tools
            .get(id)
            .map(|t| t.manifest.clone())
            .ok_or_else(|| ToolError::UnknownTool(id.clone()))
    }

    pub fn all_ids(&self) -> Vec<ToolId> {
        self.tools.read().expect("registry lock").keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.tools.read().expect("registry lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Replaces a tool's documentation (used by the refinement loop).
    pub fn update_documentation(&self, id: &ToolId, doc: ToolDoc) -> Result<(), ToolError> {
        let mut tools = self.tools.write().expect("registry lock");
        let tool = tools
            .get_mut(id)
            .ok_or_else(|| ToolError::UnknownTool(id.clone()))?;
        tool.manifest.documentation = doc;
        Ok(())
    }

    /// Invokes a tool with schema validation on both sides, a hard timeout
    /// at the manifest's max latency (optionally capped tighter by the
    /// caller), and an audit record per call. Calls are idempotent by
    /// contract, so retrying a timeout is safe.
    pub fn invoke(&self, id: &ToolId, args: &Value) -> Result<Value, ToolError> {
        self.invoke_with_timeout(id, args, None)
    }

    pub fn invoke_with_timeout(
        &self,
        id: &ToolId,
        args: &Value,
        timeout_cap_ms: Option<u64>,
    ) -> Result<Value, ToolError> {
        let manifest = self.manifest(id)?;
        manifest
            .input_schema
            .check(args)
            .map_err(ToolError::SchemaViolation)?;

        let timeout_ms = match timeout_cap_ms {
            Some(cap) => cap.min(manifest.latency_bounds.1),
            None => manifest.latency_bounds.1,
        };
        self.audit.emit(
            "registry",
            "tool.call",
            serde_json::json!({ "tool": id.as_str(), "args": args }),
        );

        let result = match &manifest.endpoint {
            Endpoint::Http(url) => rpc::call_remote(url, id, args, timeout_ms),
            Endpoint::Builtin(tag) => {
                // Builtins run on a worker thread so a stalled stub trips
                // the same timeout a remote call would.
                let (tx, rx) = mpsc::channel();
                let stubs = Arc::clone(&self.stubs);
                let tag = tag.clone();
                let tool = id.clone();
                let args = args.clone();
                std::thread::spawn(move || {
                    let out = stubs.call(&tag, &tool, &args);
                    let _ = tx.send(out);
                });
                match rx.recv_timeout(Duration::from_millis(timeout_ms)) {
                    Ok(out) => out,
                    Err(_) => Err(ToolError::ToolUnresponsive {
                        tool: id.clone(),
                        timeout_ms,
                    }),
                }
            }
        };

        match &result {
            Ok(output) => {
                manifest
                    .output_schema
                    .check(output)
                    .map_err(ToolError::SchemaViolation)?;
                self.audit.emit(
                    "registry",
                    "tool.result",
                    serde_json::json!({ "tool": id.as_str(), "output": output }),
                );
            }
            Err(err) => {
                self.audit.emit(
                    "registry",
                    "tool.error",
                    serde_json::json!({ "tool": id.as_str(), "error": err.to_string() }),
                );
            }
        }
        result
    }

    /// Clusters registered tools into toolkits by the embedding of their
    /// documentation, using seeded k-means++. `k` defaults to
    /// ceil(sqrt(n/2)) when not given.
    pub fn assign_toolkits(
        &self,
        gateway: &Gateway,
        k: Option<usize>,
        seed: u64,
    ) -> Result<Vec<Toolkit>, ToolError> {
        let descriptions: Vec<(ToolId, String)> = {
            let tools = self.tools.read().expect("registry lock");
            tools
                .values()
                .map(|t| (t.manifest.tool_id.clone(), doc_text(&t.manifest)))
                .collect()
        };
        if descriptions.is_empty() {
            return Err(ToolError::KOutOfRange { k: k.unwrap_or(0), max: 0 });
        }
        let n = descriptions.len();
        let k = k.unwrap_or_else(|| ((n as f64 / 2.0).sqrt().ceil() as usize).max(1));
        if k == 0 || k > n {
            return Err(ToolError::KOutOfRange { k, max: n });
        }

        let embeddings: Vec<Vec<f64>> = descriptions
            .iter()
            .map(|(_, text)| {
                gateway
                    .embed(text)
                    .map(|e| e.values.iter().map(|&v| v as f64).collect())
            })
            .collect::<Result<_, _>>()?;

        let outcome = crate::kmeans::kmeans(&embeddings, k, seed, 100, 1)?;

        let mut members: Vec<BTreeSet<ToolId>> = vec![BTreeSet::new(); k];
        for ((id, _), &cluster) in descriptions.iter().zip(&outcome.assignments) {
            members[cluster].insert(id.clone());
        }

        let toolkits: Vec<Toolkit> = outcome
            .centroids
            .iter()
            .enumerate()
            .filter(|(ci, _)| !members[*ci].is_empty())
            .map(|(ci, centroid)| Toolkit {
                toolkit_id: format!("toolkit-{ci}"),
                member_tool_ids: members[ci].clone(),
                centroid: centroid.iter().map(|&v| v as f32).collect(),
                label: self.toolkit_label(&members[ci]),
            })
            .collect();

        {
            let mut tools = self.tools.write().expect("registry lock");
            for toolkit in &toolkits {
                for id in &toolkit.member_tool_ids {
                    if let Some(tool) = tools.get_mut(id) {
                        tool.toolkit_id = Some(toolkit.toolkit_id.clone());
                    }
                }
            }
        }
        *self.toolkits.write().expect("registry lock") = toolkits.clone();
        Ok(toolkits)
    }

    fn toolkit_label(&self, members: &BTreeSet<ToolId>) -> String {
        let tools = self.tools.read().expect("registry lock");
        let mut role_counts: BTreeMap<String, usize> = BTreeMap::new();
        for id in members {
            if let Some(t) = tools.get(id) {
                *role_counts
                    .entry(t.manifest.semantic_role.to_lowercase())
                    .or_insert(0) += 1;
            }
        }
        role_counts
            .into_iter()
            .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
            .map(|(role, _)| format!("{role} toolkit"))
            .unwrap_or_else(|| "toolkit".to_string())
    }

    pub fn toolkits(&self) -> Vec<Toolkit> {
        self.toolkits.read().expect("registry lock").clone()
    }

    /// Directly installs toolkit assignments (used by fixtures and tests).
    pub fn set_toolkits(&self, toolkits: Vec<Toolkit>) {
        {
            let mut tools = self.tools.write().expect("registry lock");
            for t in tools.values_mut() {
                t.toolkit_id = None;
            }
            for toolkit in &toolkits {
                for id in &toolkit.member_tool_ids {
                    if let Some(tool) = tools.get_mut(id) {
                        tool.toolkit_id = Some(toolkit.toolkit_id.clone());
                    }
                }
            }
        }
        *self.toolkits.write().expect("registry lock") = toolkits;
    }

    /// Other members of the failed tool's toolkit, most-similar
    /// documentation first (ties by tool id).
    pub fn fallback_candidates(
        &self,
        id: &ToolId,
        gateway: &Gateway,
    ) -> Result<Vec<ToolId>, ToolError> {
        let toolkit_id = {
            let tools = self.tools.read().expect("registry lock");
            let tool = tools
                .get(id)
                .ok_or_else(|| ToolError::UnknownTool(id.clone()))?;
            tool.toolkit_id
                .clone()
                .ok_or_else(|| ToolError::ToolkitNotAssigned(id.clone()))?
        };
        let toolkit = self
            .toolkits
            .read()
            .expect("registry lock")
            .iter()
            .find(|t| t.toolkit_id == toolkit_id)
            .cloned()
            .ok_or_else(|| ToolError::ToolkitNotAssigned(id.clone()))?;

        let anchor = gateway.embed(&doc_text(&self.manifest(id)?))?;
        let mut scored: Vec<(ToolId, f64)> = Vec::new();
        for member in &toolkit.member_tool_ids {
            if member == id {
                continue;
            }
            let text = doc_text(&self.manifest(member)?);
            let sim = similarity(gateway, &anchor, &text)?;
            scored.push((member.clone(), sim));
        }
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        Ok(scored.into_iter().map(|(id, _)| id).collect())
    }

    pub fn audit(&self) -> &Arc<TraceLog> {
        &self.audit
    }

    pub fn stubs(&self) -> &Arc<StubHost> {
        &self.stubs
    }

    /// One chat call that condenses a tool's documentation into a short
    /// functional description.
    pub fn summarize_tool(&self, doc: &ToolDoc, gateway: &Gateway) -> Result<String, ToolError> {
        if doc.current.trim().is_empty() {
            return Err(ToolError::EmptyInput);
        }
        let reply = gateway.ask(
            "tool-summary",
            format!("Summarize this tool documentation in one sentence:\n{}", doc.current),
        )?;
        if reply.text.trim().is_empty() {
            return Err(ToolError::InvalidManifest("empty summary".into()));
        }
        Ok(reply.text)
    }
}

/// Text embedded for similarity purposes: name plus current documentation.
pub fn doc_text(manifest: &ToolManifest) -> String {
    format!("{}: {}", manifest.name, manifest.documentation.current)
}

fn similarity(gateway: &Gateway, anchor: &Embedding, text: &str) -> Result<f64, ToolError> {
    let other = gateway.embed(text)?;
    Ok(cosine(anchor, &other)?)
}
