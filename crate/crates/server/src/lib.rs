//! HTTP service and command-line plumbing around `palm-core`.

pub mod api;
pub mod config;
pub mod pipeline;

use std::sync::Arc;

use palm_core::SnapshotStore;
use tokio::net::TcpListener;

pub use api::{router, AppState};
pub use config::ServiceConfig;

/// Opens the store and loads the configured grade scale.
pub fn app_state(config: &ServiceConfig) -> anyhow::Result<AppState> {
    let store = SnapshotStore::open(&config.store_path)?;
    let grade_scale = config.grade_scale()?;
    Ok(AppState {
        store: Arc::new(store),
        map_config: config.map_config(None),
        grade_scale,
        admin_token: config.admin_token.clone(),
    })
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    state: Arc<AppState>,
    cors_allowed_origins: &[String],
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(state, cors_allowed_origins);
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
