//! HTTP/JSON surface of the anonroom chat service.
//!
//! Clients join without credentials, send to public, group or private
//! scopes, and receive messages by long-polling `/api/poll` with a cursor.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use tokio::net::TcpListener;

mod app;
pub mod clock;
mod error;
mod routes;
mod sessions;

pub use app::{AppState, Config, GroupJoined, GroupView, PollPage, Roster, ScopeRequest};
pub use error::ApiError;
pub use routes::router;
pub use sessions::{Session, SessionRegistry};

/// Starts the periodic session sweep and log sync.
pub fn spawn_maintenance(app: AppState) -> tokio::task::JoinHandle<()> {
    let sweep_every = Duration::from_millis((app.config().session_timeout_ms / 4).clamp(250, 5_000));
    tokio::spawn(async move {
        let mut sync_tick = tokio::time::interval(Duration::from_secs(1));
        let mut sweep_tick = tokio::time::interval(sweep_every);
        loop {
            tokio::select! {
                _ = sync_tick.tick() => {
                    if let Err(e) = app.store().sync_if_due() {
                        tracing::error!("periodic sync failed: {e}");
                    }
                }
                _ = sweep_tick.tick() => {
                    let n = app.sweep_sessions();
                    if n > 0 {
                        tracing::debug!(expired = n, "swept idle sessions");
                    }
                }
            }
        }
    })
}

/// Binds `addr` and serves until the listener fails.
pub async fn serve(listener: TcpListener, app: AppState, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let maintenance = spawn_maintenance(app.clone());
    let result = axum::serve(listener, router(app, static_dir)).await;
    maintenance.abort();
    result
}

/// Convenience for tests: serves `app` on an ephemeral local port.
pub async fn spawn_local(app: AppState) -> std::io::Result<SocketAddr> {
    let listener = TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    tokio::spawn(serve(listener, app, None));
    Ok(addr)
}
