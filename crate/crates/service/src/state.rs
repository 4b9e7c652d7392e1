use std::io;
use std::sync::{Arc, RwLock};

use emosuggest_core::session::TimingConfig;
use emosuggest_core::ColorMap;
use tracing::info;

use crate::config::ServiceConfig;
use crate::engine::{Engine, EngineError};
use crate::labels::LabelStore;
use crate::sessions::SessionRegistry;

pub const LABELS_FILE: &str = "labels.jsonl";
pub const SESSIONS_DIR: &str = "sessions";

#[derive(Debug, thiserror::Error)]
pub enum ReloadError {
    #[error("no config to reload from")]
    NoConfig,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Shared service state. Read requests clone the current engine `Arc`, so
/// an engine swap never exposes a partially built index.
pub struct AppState {
    config: Option<ServiceConfig>,
    timing: TimingConfig,
    colors: ColorMap,
    engine: RwLock<Option<Arc<Engine>>>,
    labels: LabelStore,
    sessions: SessionRegistry,
}

impl AppState {
    /// State without persistence or reload support; used by tests and the demo.
    pub fn in_memory(timing: TimingConfig, colors: ColorMap) -> Self {
        AppState {
            config: None,
            timing,
            colors,
            engine: RwLock::new(None),
            labels: LabelStore::in_memory(),
            sessions: SessionRegistry::in_memory(),
        }
    }

    /// Opens the label store and session directory under `log_dir`. The
    /// engine starts unloaded.
    pub fn from_config(config: &ServiceConfig) -> io::Result<Self> {
        std::fs::create_dir_all(&config.log_dir)?;
        Ok(AppState {
            config: Some(config.clone()),
            timing: config.timing,
            colors: config.colors.clone(),
            engine: RwLock::new(None),
            labels: LabelStore::open(config.log_dir.join(LABELS_FILE))?,
            sessions: SessionRegistry::persistent(config.log_dir.join(SESSIONS_DIR))?,
        })
    }

    pub fn engine(&self) -> Option<Arc<Engine>> {
        self.engine.read().expect("engine lock").clone()
    }

    pub fn install(&self, engine: Engine) {
        *self.engine.write().expect("engine lock") = Some(Arc::new(engine));
    }

    /// Rebuilds the engine from the configured files; the old engine keeps
    /// serving until the new one is complete. Returns the new turn count.
    pub fn reload(&self) -> Result<usize, ReloadError> {
        let config = self.config.as_ref().ok_or(ReloadError::NoConfig)?;
        let engine = Engine::load(config)?;
        let turns = engine.turns();
        self.install(engine);
        info!(turns, "engine reloaded");
        Ok(turns)
    }

    pub fn timing(&self) -> &TimingConfig {
        &self.timing
    }

    pub fn colors(&self) -> &ColorMap {
        &self.colors
    }

    pub fn labels(&self) -> &LabelStore {
        &self.labels
    }

    pub fn sessions(&self) -> &SessionRegistry {
        &self.sessions
    }
}
