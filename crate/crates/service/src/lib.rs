//! HTTP service around the suggestion engine: classification, swipe
//! payloads, session event logs and label export.

pub mod api;
pub mod config;
pub mod engine;
pub mod labels;
pub mod sessions;
pub mod state;

use std::future::Future;
use std::sync::Arc;

use tokio::net::TcpListener;
use tracing::info;

pub use api::{router, MAX_BODY_BYTES};
pub use config::{ConfigError, ServiceConfig};
pub use engine::{Engine, EngineError};
pub use state::AppState;

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Loads everything from `config`, binds, and serves until `shutdown`
/// resolves. Load failures return before the socket is bound.
pub async fn serve(config: ServiceConfig, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServeError> {
    let state = AppState::from_config(&config)?;
    let loader = config.clone();
    let engine = tokio::task::spawn_blocking(move || Engine::load(&loader))
        .await
        .map_err(std::io::Error::other)??;
    state.install(engine);
    let listener = TcpListener::bind(config.listen).await?;
    serve_on(listener, Arc::new(state), shutdown).await
}

pub async fn serve_on(
    listener: TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServeError> {
    info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await?;
    Ok(())
}
