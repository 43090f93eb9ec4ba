use std::time::Instant;

use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};

use tearsim_core::api::{
    load_model_source, BenchRequest, BenchResponse, DecomposeRequest, DecomposeResponse, Health, LoadedModel,
    ReplayRequest, ReplayResponse, SessionCreated, SessionDigest, TearRequest, TearResponse,
};
use tearsim_core::bench::{digest_deltas, run_tear_bench, BenchConfig};
use tearsim_core::io::{write_bench, write_clustering, write_obj};
use tearsim_core::particles::{SoftBodyParams, SoftBodyState};
use tearsim_core::protocol::{Envelope, ModelSource, PROTOCOL_VERSION};
use tearsim_core::session::Session;
use tearsim_core::tear::{continuous_tear, TearOptions};

use crate::{ws, AppState, ServiceError, BODY_LIMIT};

type ApiResult<T> = Result<Json<T>, ServiceError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", axum::routing::delete(delete_session))
        .route("/sessions/{id}/messages", post(post_message))
        .route("/sessions/{id}/tick", post(tick))
        .route("/sessions/{id}/snapshot", get(snapshot))
        .route("/sessions/{id}/transcript", get(transcript))
        .route("/sessions/{id}/digest", get(digest))
        .route("/sessions/{id}/ws", get(ws::upgrade))
        .route("/replay", post(replay))
        .route("/tear", post(tear))
        .route("/decompose", post(decompose))
        .route("/bench", post(bench))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))?
}

fn load(source: &ModelSource) -> Result<LoadedModel, ServiceError> {
    load_model_source(source).map_err(ServiceError::BadRequest)
}

fn source_name(source: &ModelSource) -> String {
    match source {
        ModelSource::Bunny => "bunny".into(),
        ModelSource::Grid { n } => format!("grid-{n}"),
        ModelSource::Cylinder { rings, segments, .. } => format!("cylinder-{rings}x{segments}"),
        ModelSource::Obj { .. } => "obj".into(),
        ModelSource::Subdivided { model, levels } => format!("{}-sub{levels}", source_name(model)),
    }
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        protocol_version: PROTOCOL_VERSION,
        sessions: state.session_count(),
    })
}

async fn create_session(State(state): State<AppState>) -> Result<(StatusCode, Json<SessionCreated>), ServiceError> {
    let session = state.create_session()?;
    tracing::info!(%session, "session created");
    Ok((StatusCode::CREATED, Json(SessionCreated { session })))
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ServiceError> {
    state.remove_session(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

/// Body is one envelope; malformed envelopes are answered in-band.
async fn post_message(State(state): State<AppState>, Path(id): Path<String>, body: String) -> ApiResult<Vec<Envelope>> {
    Ok(Json(state.session(&id)?.text(body).await?))
}

async fn tick(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Vec<Envelope>> {
    Ok(Json(state.session(&id)?.tick().await?))
}

async fn snapshot(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Envelope> {
    state
        .session(&id)?
        .snapshot()
        .await?
        .map(Json)
        .ok_or_else(|| ServiceError::BadRequest("no model loaded".into()))
}

async fn transcript(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Vec<Envelope>> {
    Ok(Json(state.session(&id)?.transcript().await?))
}

async fn digest(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionDigest> {
    Ok(Json(state.session(&id)?.digest().await?))
}

async fn replay(Json(req): Json<ReplayRequest>) -> ApiResult<ReplayResponse> {
    blocking(move || {
        let s = Session::replay("replay", &req.transcript);
        Ok(ReplayResponse {
            messages: req.transcript.len(),
            revision: s.revision(),
            digest: s.state_digest(),
        })
    })
    .await
    .map(Json)
}

async fn tear(Json(req): Json<TearRequest>) -> ApiResult<TearResponse> {
    blocking(move || {
        let mut mesh = load(&req.model)?.mesh;
        let opts = TearOptions {
            width: req.path.width,
            spacing: req.path.spacing,
            min_dt: req.path.min_dt,
            blade_extent: req.blade_extent,
        };
        let run = continuous_tear(&mut mesh, &req.path.samples, &opts).map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        let obj = String::from_utf8(write_obj(&mesh.export())).expect("obj text is utf-8");
        Ok(TearResponse {
            delta_digest: digest_deltas(&run.deltas),
            deltas: run.deltas,
            skipped: run.skipped,
            vertices: mesh.live_vertex_count(),
            faces: mesh.live_face_count(),
            obj,
        })
    })
    .await
    .map(Json)
}

async fn decompose(Json(req): Json<DecomposeRequest>) -> ApiResult<DecomposeResponse> {
    blocking(move || {
        let mesh = load(&req.model)?.mesh;
        let t = Instant::now();
        let soft = SoftBodyState::decompose(&mesh, req.range, SoftBodyParams::default())
            .map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        let micros = t.elapsed().as_secs_f64() * 1e6;
        Ok(DecomposeResponse {
            vertices: mesh.live_vertex_count(),
            particles: soft.len(),
            micros,
            clustering: String::from_utf8(write_clustering(&soft.to_dump())).expect("json is utf-8"),
        })
    })
    .await
    .map(Json)
}

async fn bench(Json(req): Json<BenchRequest>) -> ApiResult<BenchResponse> {
    blocking(move || {
        let mesh = load(&req.model)?.mesh;
        let name = req.mesh_name.clone().unwrap_or_else(|| source_name(&req.model));
        let cfg = BenchConfig {
            repetitions: req.repetitions,
            particle_range: req.particle_range,
            blade_extent: req.blade_extent,
        };
        let report = run_tear_bench(&mesh, &name, &req.path, &cfg).map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        let csv = write_bench(&report).map_err(|e| ServiceError::Internal(e.to_string()))?;
        Ok(BenchResponse {
            passed: report.flagged.is_none() && report.within_budget(req.budget_micros),
            csv: String::from_utf8(csv).expect("csv is utf-8"),
            budget_micros: req.budget_micros,
            report,
        })
    })
    .await
    .map(Json)
}
