//! Iterative tool-documentation refinement.
//!
//! Each iteration explores a usage scenario, invokes the tool, analyzes the
//! outcome against the current documentation, and rewrites the document.
//! Exploration queries must pass a diversity gate against everything tried
//! before; rejected candidates are regenerated up to three times with a
//! reflection note, then the iteration is skipped. The loop halts early
//! once consecutive documentation versions agree closely enough — the
//! termination score is the mean of embedding cosine and BLEU.

use crate::{bleu, registry::ToolRegistry, ToolDoc, ToolError};
use serde::{Deserialize, Serialize};
use skein_core::{ToolId, Value};
use skein_gateway::{cosine, Embedding, Gateway};

/// One exploration attempt, kept for the full history of the loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationRecord {
    pub query: String,
    pub params: Value,
    /// Tool output, or an {"error": ...} note when the call failed.
    pub result: Value,
    /// Whether the candidate passed the diversity gate.
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    pub max_iters: usize,
    /// Diversity threshold: candidates with max prior similarity >= phi
    /// are rejected.
    pub phi: f64,
    /// Termination threshold: stop once delta exceeds tau.
    pub tau: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            max_iters: 8,
            phi: 0.9,
            tau: 0.9,
        }
    }
}

/// Reflection retries allowed when the diversity gate rejects a candidate.
pub const GATE_RETRIES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineOutcome {
    pub doc: ToolDoc,
    pub records: Vec<ExplorationRecord>,
    /// Termination score after each accepted rewrite.
    pub deltas: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    /// Chat rounds spent per role (explore, analyze, rewrite).
    pub chat_rounds: (usize, usize, usize),
    /// Per-iteration error notes; the loop continues past them.
    pub errors: Vec<String>,
}

/// Accepts a candidate iff its maximum similarity to the accepted history
/// stays under `phi`. An empty history always accepts. Monotone: growing
/// the history can only flip accept into reject.
pub fn diversity_gate(
    candidate: &Embedding,
    history: &[Embedding],
    phi: f64,
) -> Result<bool, ToolError> {
    if !(phi > 0.0 && phi <= 1.0) {
        return Err(ToolError::InvalidManifest(format!(
            "phi must lie in (0, 1], got {phi}"
        )));
    }
    for prior in history {
        if cosine(candidate, prior)? >= phi {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Termination score between consecutive documentation versions:
/// (embedding cosine + BLEU) / 2.
pub fn termination_delta(
    current: &str,
    previous: &str,
    gateway: &Gateway,
) -> Result<f64, ToolError> {
    if current.trim().is_empty() || previous.trim().is_empty() {
        return Err(ToolError::EmptyInput);
    }
    let sim = cosine(&gateway.embed(current)?, &gateway.embed(previous)?)?;
    let word_match = bleu::bleu(current, previous)?;
    Ok((sim + word_match) / 2.0)
}

#[derive(Deserialize)]
struct ExploreReply {
    query: String,
    #[serde(default)]
    params: Value,
}

#[derive(Deserialize)]
struct RewriteReply {
    doc: String,
    #[serde(default)]
    direction: String,
}

/// Runs the refinement loop for one registered tool and writes the final
/// documentation back to the registry.
pub fn refine_documentation(
    registry: &ToolRegistry,
    tool_id: &ToolId,
    options: RefineOptions,
    gateway: &Gateway,
) -> Result<RefineOutcome, ToolError> {
    let manifest = registry.manifest(tool_id)?;
    let mut doc = manifest.documentation.clone();
    let mut accepted_embeddings: Vec<Embedding> = Vec::new();
    let mut accepted_queries: Vec<String> = Vec::new();
    let mut records = Vec::new();
    let mut deltas = Vec::new();
    let mut errors = Vec::new();
    let mut direction = String::new();
    let mut converged = false;
    let mut rounds = (0usize, 0usize, 0usize);
    let mut iterations_run = 0usize;

    'iterations: for _ in 0..options.max_iters {
        iterations_run += 1;

        // Experience gathering: explore with the diversity gate.
        let mut reflection: Option<String> = None;
        let mut exploration: Option<(ExploreReply, Embedding)> = None;
        for _attempt in 0..=GATE_RETRIES {
            let mut prompt = format!(
                "Tool documentation (revision {}):\n{}\n",
                doc.revision, doc.current
            );
            if !direction.is_empty() {
                prompt.push_str(&format!("Suggested direction: {direction}\n"));
            }
            if !accepted_queries.is_empty() {
                prompt.push_str(&format!("Previously explored: {}\n", accepted_queries.join("; ")));
            }
            if let Some(rejected) = &reflection {
                prompt.push_str(&format!(
                    "The candidate query {rejected:?} was too similar to a prior one; propose a more novel scenario.\n"
                ));
            }
            prompt.push_str("Reply with JSON {\"query\": ..., \"params\": {...}} describing one exploration call.");

            rounds.0 += 1;
            let reply = match gateway.ask("doc-explore", prompt) {
                Ok(r) => r,
                Err(e) => {
                    errors.push(format!("explore: {e}"));
                    continue 'iterations;
                }
            };
            let parsed: ExploreReply = match serde_json::from_str(&reply.text) {
                Ok(p) => p,
                Err(e) => {
                    errors.push(format!("explore parse: {e}"));
                    continue 'iterations;
                }
            };
            let embedding = gateway.embed(&parsed.query)?;
            if diversity_gate(&embedding, &accepted_embeddings, options.phi)? {
                exploration = Some((parsed, embedding));
                break;
            }
            records.push(ExplorationRecord {
                query: parsed.query.clone(),
                params: parsed.params.clone(),
                result: Value::Null,
                accepted: false,
            });
            reflection = Some(parsed.query);
        }
        let Some((explore, embedding)) = exploration else {
            // Every candidate was rejected; the document stays unchanged
            // this iteration.
            continue;
        };

        let result = match registry.invoke(tool_id, &explore.params) {
            Ok(out) => out,
            Err(e) => {
                errors.push(format!("invoke: {e}"));
                records.push(ExplorationRecord {
                    query: explore.query,
                    params: explore.params,
                    result: serde_json::json!({ "error": e.to_string() }),
                    accepted: true,
                });
                accepted_embeddings.push(embedding);
                continue;
            }
        };

        // Learning from experience.
        rounds.1 += 1;
        let suggestion = match gateway.ask(
            "doc-analyze",
            format!(
                "Documentation:\n{}\nExploration query: {}\nTool result: {}\nRevisions so far: {}\nSuggest targeted documentation improvements.",
                doc.current,
                explore.query,
                result,
                doc.revision
            ),
        ) {
            Ok(r) => r.text,
            Err(e) => {
                errors.push(format!("analyze: {e}"));
                continue;
            }
        };

        // Documentation rewriting.
        rounds.2 += 1;
        let rewrite = match gateway.ask(
            "doc-rewrite",
            format!(
                "Documentation:\n{}\nExploration query: {}\nTool result: {}\nSuggestions: {}\nRevisions so far: {}\nReply with JSON {{\"doc\": ..., \"direction\": ...}}.",
                doc.current, explore.query, result, suggestion, doc.revision
            ),
        ) {
            Ok(r) => r,
            Err(e) => {
                errors.push(format!("rewrite: {e}"));
                continue;
            }
        };
        let parsed: RewriteReply = match serde_json::from_str(&rewrite.text) {
            Ok(p) => p,
            Err(e) => {
                errors.push(format!("rewrite parse: {e}"));
                continue;
            }
        };

        let previous = doc.current.clone();
        doc.accept_rewrite(parsed.doc);
        direction = parsed.direction;
        accepted_embeddings.push(embedding);
        accepted_queries.push(explore.query.clone());
        records.push(ExplorationRecord {
            query: explore.query,
            params: explore.params,
            result,
            accepted: true,
        });

        let delta = termination_delta(&doc.current, &previous, gateway)?;
        deltas.push(delta);
        if delta > options.tau {
            converged = true;
            break;
        }
    }

    registry.update_documentation(tool_id, doc.clone())?;
    Ok(RefineOutcome {
        doc,
        records,
        deltas,
        iterations_run,
        converged,
        chat_rounds: rounds,
        errors,
    })
}
