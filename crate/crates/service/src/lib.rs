//! Service wiring: builds the full pipeline from a config file and exposes
//! it over HTTP and a CLI.

pub mod cli;
pub mod config;
pub mod http;
pub mod trace_store;

pub use config::{GatewayMode, ServiceConfig};
pub use trace_store::TraceStore;

use serde::{Deserialize, Serialize};
use skein_cache::SemanticCache;
use skein_core::{Query, TraceLog, Turn};
use skein_gateway::{Gateway, MockProvider, Provider, RealProvider};
use skein_orchestrator::{Orchestrator, OrchestratorError, OrchestratorOptions, PromptStore};
use skein_retrieval::SceneGraph;
use skein_tools::stubs::StubHost;
use skein_tools::ToolRegistry;
use skein_writer::{render_answer, CitationedAnswer};
use std::sync::{Arc, RwLock};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("config error: {0}")]
    Config(#[from] config::ConfigError),
    #[error("gateway setup failed: {0}")]
    Gateway(#[from] skein_gateway::GatewayError),
    #[error("tool setup failed: {0}")]
    Tools(#[from] skein_tools::ToolError),
    #[error("scene graph failed: {0}")]
    Scenes(#[from] skein_retrieval::RetrievalError),
    #[error("cache failed: {0}")]
    Cache(#[from] skein_cache::CacheError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("episode failed: {0}")]
    Episode(#[from] OrchestratorError),
    #[error("query text must be non-empty")]
    EmptyQuery,
}

/// One search response as served over HTTP.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub answer: CitationedAnswer,
    /// Rendered answer text with bracketed citations.
    pub answer_text: String,
    /// Team configuration used, or "Cached" for cache hits.
    pub config_used: String,
    pub trace_id: String,
    pub cached: bool,
}

/// The assembled application.
pub struct App {
    pub config: ServiceConfig,
    pub trace: Arc<TraceLog>,
    pub registry: Arc<ToolRegistry>,
    pub gateway: Gateway,
    orchestrator: RwLock<Arc<Orchestrator>>,
    pub cache: SemanticCache,
    pub store: TraceStore,
    query_counter: std::sync::atomic::AtomicU64,
}

impl App {
    pub fn build(config: ServiceConfig) -> Result<Self, ServiceError> {
        let trace = Arc::new(TraceLog::new());

        let provider: Arc<dyn Provider> = match config.gateway.mode {
            GatewayMode::Mock => Arc::new(MockProvider::from_files(&config.gateway.fixtures)?),
            GatewayMode::Real => Arc::new(RealProvider::from_env()?),
        };
        let gateway = Gateway::new(provider, trace.clone());

        let corpus_text = std::fs::read_to_string(&config.corpus)?;
        let stubs = StubHost::from_corpus_json(&corpus_text)?;
        let registry = Arc::new(ToolRegistry::new(stubs, trace.clone()));
        let manifest_text = std::fs::read_to_string(&config.registry)?;
        registry.register_all_json(&manifest_text)?;

        let orchestrator = Arc::new(Self::make_orchestrator(
            &config,
            registry.clone(),
            gateway.clone(),
            trace.clone(),
        )?);

        let cache = match &config.cache.persist_path {
            Some(path) if path.exists() => {
                SemanticCache::load(path, config.cache.capacity, config.cache.tau)?
            }
            _ => SemanticCache::new(config.cache.capacity, config.cache.tau)?,
        };

        let store = TraceStore::new(config.trace_dir.clone())?;

        Ok(Self {
            config,
            trace,
            registry,
            gateway,
            orchestrator: RwLock::new(orchestrator),
            cache,
            store,
            query_counter: std::sync::atomic::AtomicU64::new(0),
        })
    }

    fn make_orchestrator(
        config: &ServiceConfig,
        registry: Arc<ToolRegistry>,
        gateway: Gateway,
        trace: Arc<TraceLog>,
    ) -> Result<Orchestrator, ServiceError> {
        let scenes_text = std::fs::read_to_string(&config.scenes)?;
        let scenes = SceneGraph::from_json(&scenes_text)?;
        let prompts = match &config.prompt_dir {
            Some(dir) => PromptStore::with_overrides(dir)?,
            None => PromptStore::builtin(),
        };
        let options = OrchestratorOptions {
            max_replans: config.max_replans,
            boundary_cap: config.boundary_cap,
            alpha: config.alpha,
            execution: config.execution,
            chat_budget: config.chat_budget,
        };
        Ok(Orchestrator::new(
            registry, gateway, trace, scenes, prompts, options,
        ))
    }

    pub fn orchestrator(&self) -> Arc<Orchestrator> {
        self.orchestrator.read().expect("orchestrator lock").clone()
    }

    /// Re-reads the scene graph file and swaps in a rebuilt orchestrator.
    pub fn reload_scenes(&self) -> Result<(), ServiceError> {
        let fresh = Self::make_orchestrator(
            &self.config,
            self.registry.clone(),
            self.gateway.clone(),
            self.trace.clone(),
        )?;
        *self.orchestrator.write().expect("orchestrator lock") = Arc::new(fresh);
        Ok(())
    }

    /// The full query path: cache lookup, then a fresh episode on a miss,
    /// with the episode's trace flushed to the daily store.
    pub fn search(&self, text: &str, context: Vec<Turn>) -> Result<SearchOutcome, ServiceError> {
        if text.trim().is_empty() {
            return Err(ServiceError::EmptyQuery);
        }
        let n = self
            .query_counter
            .fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        let query = Query::new(format!("q-{n}"), text).with_context(context);

        if let Some(hit) = self
            .cache
            .lookup(&query, self.cache.default_tau(), &self.gateway)?
        {
            let trace_id = format!("cache-{n}");
            self.trace.emit(
                &trace_id,
                "cache.hit",
                serde_json::json!({ "query": text, "cosine": hit.cosine }),
            );
            let _ = self.store.append(&self.trace.events_for(&trace_id));
            return Ok(SearchOutcome {
                answer_text: render_answer(&hit.entry.response),
                answer: hit.entry.response,
                config_used: "Cached".to_string(),
                trace_id,
                cached: true,
            });
        }

        let episode = self.orchestrator().run_episode(&query)?;
        let answer = episode.answer.clone().unwrap_or(CitationedAnswer {
            statements: Vec::new(),
            degraded: true,
        });
        if !answer.degraded {
            let _ = self.cache.store(&query, &answer, &self.gateway);
        }
        let _ = self.store.append(&self.trace.events_for(&episode.trace_id));
        if let Some(path) = &self.config.cache.persist_path {
            let _ = self.cache.save(path);
        }
        Ok(SearchOutcome {
            answer_text: render_answer(&answer),
            answer,
            config_used: episode.config.to_string(),
            trace_id: episode.trace_id,
            cached: false,
        })
    }
}
