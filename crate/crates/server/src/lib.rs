//! HTTP service hosting compiled rulesets as sessions.
//!
//! | method | path                       | body            | success |
//! |--------|----------------------------|-----------------|---------|
//! | POST   | `/upload-model`            | `.sleec` text   | 201 `{"session_id", "status"}` (200 when `?session_id=` replaces a model) |
//! | POST   | `/sessions/{id}/start`     |                 | 200 `{"session_id", "status"}` |
//! | POST   | `/sessions/{id}/stop`      |                 | 200 `{"session_id", "status"}` |
//! | POST   | `/sessions/{id}/step`      | snapshot JSON   | 200 obligation set plus `server_us`, `step` |
//! | GET    | `/sessions/{id}`           |                 | 200 session summary |
//! | GET    | `/sessions/{id}/latencies` |                 | 200 `{"server_us": [...]}` |
//! | GET    | `/health`                  |                 | 200 `{"status": "ok"}` |
//!
//! Errors are `{"error": CODE, "message": ...}` plus code-specific fields.
//! Steps on one session are serialized; different sessions run concurrently.

mod log;
mod routes;
mod session;

use std::net::SocketAddr;

pub use log::{RequestLog, RequestLogEntry};
pub use routes::router;
pub use session::{ServerState, SessionStatus};

/// A server bound to a local port and running on the current runtime.
pub struct RunningServer {
    pub addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    handle: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl RunningServer {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub async fn shutdown(mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.handle
            .await
            .unwrap_or_else(|e| Err(std::io::Error::other(e)))
    }
}

/// Binds `addr` (port 0 picks a free port) and serves in a background task.
pub async fn spawn(addr: SocketAddr, state: ServerState) -> std::io::Result<RunningServer> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let app = router(state);
    let handle = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    Ok(RunningServer {
        addr,
        shutdown: Some(tx),
        handle,
    })
}

/// Serves until the process receives ctrl-c.
pub async fn serve(addr: SocketAddr, state: ServerState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
