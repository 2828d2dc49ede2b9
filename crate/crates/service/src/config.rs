//! Service configuration, loaded from JSON. Relative paths resolve
//! against the config file's own directory so a checkout runs from
//! anywhere.

use serde::{Deserialize, Serialize};
use skein_executor::ExecutionBudget;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {0}: {1}")]
    Io(PathBuf, String),
    #[error("config malformed: {0}")]
    Parse(String),
    #[error("configured path missing: {0}")]
    MissingPath(PathBuf),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GatewayMode {
    Mock,
    Real,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GatewayConfig {
    pub mode: GatewayMode,
    /// Fixture JSONL files for the mock provider.
    #[serde(default)]
    pub fixtures: Vec<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheConfig {
    pub capacity: usize,
    pub tau: f64,
    #[serde(default)]
    pub persist_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub listen_addr: String,
    pub gateway: GatewayConfig,
    pub registry: PathBuf,
    pub corpus: PathBuf,
    pub scenes: PathBuf,
    #[serde(default)]
    pub prompt_dir: Option<PathBuf>,
    pub boundary_cap: usize,
    pub alpha: f64,
    pub max_replans: usize,
    pub execution: ExecutionBudget,
    #[serde(default)]
    pub chat_budget: Option<u64>,
    pub cache: CacheConfig,
    pub trace_dir: PathBuf,
    pub default_seed: u64,
}

impl ServiceConfig {
    /// Loads and validates a config file, resolving relative paths.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(path.to_path_buf(), e.to_string()))?;
        let mut config: ServiceConfig =
            serde_json::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve(base);
        config.validate()?;
        Ok(config)
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &PathBuf| {
            if p.is_absolute() {
                p.clone()
            } else {
                base.join(p)
            }
        };
        self.registry = join(&self.registry);
        self.corpus = join(&self.corpus);
        self.scenes = join(&self.scenes);
        self.trace_dir = join(&self.trace_dir);
        self.prompt_dir = self.prompt_dir.as_ref().map(join);
        self.cache.persist_path = self.cache.persist_path.as_ref().map(join);
        self.gateway.fixtures = self.gateway.fixtures.iter().map(join).collect();
    }

    fn validate(&self) -> Result<(), ConfigError> {
        for path in [&self.registry, &self.corpus, &self.scenes] {
            if !path.exists() {
                return Err(ConfigError::MissingPath(path.clone()));
            }
        }
        for fixture in &self.gateway.fixtures {
            if !fixture.exists() {
                return Err(ConfigError::MissingPath(fixture.clone()));
            }
        }
        if self.boundary_cap == 0 {
            return Err(ConfigError::NonPositive("boundary_cap"));
        }
        if self.cache.capacity == 0 {
            return Err(ConfigError::NonPositive("cache.capacity"));
        }
        if !(self.cache.tau > 0.0 && self.cache.tau <= 1.0) {
            return Err(ConfigError::NonPositive("cache.tau"));
        }
        Ok(())
    }
}
