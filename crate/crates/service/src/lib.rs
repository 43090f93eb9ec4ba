//! HTTP/JSON and WebSocket front end for tearing sessions.
//!
//! Sessions live under `/sessions/{id}`; each accepts protocol envelopes on
//! `POST .../messages` or as text frames on `GET .../ws`. One-shot
//! operations (`/tear`, `/decompose`, `/bench`, `/replay`) run on the
//! blocking pool and keep no state.

pub mod actor;
mod error;
mod routes;
mod ws;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::Router;

pub use actor::SessionHandle;
pub use error::ServiceError;

/// Largest accepted request body (inline OBJ models can be big).
pub const BODY_LIMIT: usize = 64 << 20;

#[derive(Clone, Default)]
pub struct AppState {
    inner: Arc<Registry>,
}

#[derive(Default)]
struct Registry {
    sessions: Mutex<HashMap<String, SessionHandle>>,
    next: AtomicU64,
}

impl AppState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create_session(&self) -> Result<String, ServiceError> {
        let id = format!("s{}", self.inner.next.fetch_add(1, Ordering::Relaxed) + 1);
        let handle = SessionHandle::spawn(id.clone()).map_err(|e| ServiceError::Internal(e.to_string()))?;
        self.inner.sessions.lock().unwrap().insert(id.clone(), handle);
        Ok(id)
    }

    pub fn session(&self, id: &str) -> Result<SessionHandle, ServiceError> {
        self.inner
            .sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn remove_session(&self, id: &str) -> Result<(), ServiceError> {
        self.inner
            .sessions
            .lock()
            .unwrap()
            .remove(id)
            .map(|_| ())
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn session_count(&self) -> usize {
        self.inner.sessions.lock().unwrap().len()
    }
}

pub fn app(state: AppState) -> Router {
    routes::router(state)
}

/// Serves a fresh app on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app(AppState::new()))
        .with_graceful_shutdown(shutdown)
        .await
}
