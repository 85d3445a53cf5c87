//! Axum routes over a shared [`MatchupService`].

use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use seam_core::ingest::{Hand, PlayerId};
use seam_core::service::{SimilarRequest, Snapshot};
use seam_core::{MatchupRequest, MatchupService, Role, SeamError};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    fn bad_request(message: String) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code: "invalid_argument".into(),
            message,
            detail: Value::Null,
        }
    }
}

impl From<SeamError> for ApiError {
    fn from(e: SeamError) -> Self {
        let (status, detail) = match &e {
            SeamError::UnknownPlayer(id) => (StatusCode::NOT_FOUND, json!({ "player_id": id })),
            SeamError::UnknownSeason(s) => (StatusCode::NOT_FOUND, json!({ "season": s })),
            SeamError::InsufficientData => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({ "direct": 0, "synth_pitcher": 0, "synth_batter": 0 }),
            ),
            SeamError::InvalidArgument(_) | SeamError::DegenerateDensity(_) | SeamError::InvalidGrid(_) => {
                (StatusCode::UNPROCESSABLE_ENTITY, Value::Null)
            }
            _ => (StatusCode::INTERNAL_SERVER_ERROR, Value::Null),
        };
        Self {
            status,
            code: e.code().into(),
            message: e.to_string(),
            detail,
        }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        Self::bad_request(r.body_text())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::bad_request(r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Runs a CPU-bound query off the async workers.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, SeamError> + Send + 'static,
) -> Result<T, ApiError> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => Err(ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal".into(),
            message: e.to_string(),
            detail: Value::Null,
        }),
    }
}

pub fn router(service: Arc<MatchupService>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/config", get(config))
        .route("/players", get(players))
        .route("/similar", get(similar))
        .route("/matchup", post(matchup))
        .with_state(service)
}

fn dataset_summary(snap: &Snapshot) -> Value {
    json!({
        "dataset_hash": snap.dataset_hash,
        "season": snap.season,
        "seasons": snap.seasons,
        "ingest": snap.report,
    })
}

async fn health(State(svc): State<Arc<MatchupService>>) -> Json<Value> {
    let snap = svc.snapshot();
    let mut body = dataset_summary(&snap);
    body["status"] = json!("ok");
    Json(body)
}

async fn config(State(svc): State<Arc<MatchupService>>) -> Json<Value> {
    let c = svc.config();
    let snap = svc.snapshot();
    Json(json!({
        "season": c.season,
        "seasons": snap.seasons,
        "grid": c.grid,
        "sliders": c.sliders,
        "min_bip": c.min_bip,
        "payload_max_nodes": c.payload_max_nodes,
        "outcome": c.outcome,
        "profile": c.profile,
        "dataset_hash": snap.dataset_hash,
    }))
}

#[derive(Debug, Deserialize)]
pub struct PlayersQuery {
    pub role: Role,
    pub season: Option<u16>,
}

async fn players(
    State(svc): State<Arc<MatchupService>>,
    q: Result<Query<PlayersQuery>, QueryRejection>,
) -> ApiResult<Value> {
    let Query(q) = q?;
    let list = svc.list_players(q.role, q.season)?;
    Ok(Json(json!({ "role": q.role, "players": list })))
}

#[derive(Debug, Deserialize)]
pub struct SimilarQuery {
    pub player_id: PlayerId,
    pub role: Option<Role>,
    pub season: Option<u16>,
    pub ratio: Option<f64>,
    pub top_n: Option<usize>,
    pub opponent: Option<PlayerId>,
    pub hand: Option<Hand>,
}

async fn similar(
    State(svc): State<Arc<MatchupService>>,
    q: Result<Query<SimilarQuery>, QueryRejection>,
) -> ApiResult<seam_core::service::SimilarReport> {
    let Query(q) = q?;
    let req = SimilarRequest {
        player_id: q.player_id,
        role: q.role,
        season: q.season,
        ratio: q.ratio,
        top_n: q.top_n,
        opponent: q.opponent,
        hand: q.hand,
    };
    Ok(Json(blocking(move || svc.similar_players(&req)).await?))
}

async fn matchup(
    State(svc): State<Arc<MatchupService>>,
    body: Result<Json<MatchupRequest>, JsonRejection>,
) -> ApiResult<seam_core::MatchupReport> {
    let Json(req) = body?;
    Ok(Json(blocking(move || svc.compute_matchup(&req)).await?))
}
