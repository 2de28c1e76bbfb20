//! HTTP prediction service: `POST /predict`, `GET /health`.
//!
//! All shared state is immutable after startup, so concurrent requests are
//! trivially safe and identical requests get identical responses. The
//! service can start without a model (`/health` reports `degraded` and
//! `/predict` answers 503) so a misconfigured deployment is observable.

use std::sync::Arc;
use std::time::Instant;

use axum::extract::{DefaultBodyLimit, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;

use bestanswer::predict::{handle_predict, PredictError, PredictRequest};
use bestanswer::textfeat::BackgroundModel;
use bestanswer::TrainedModel;

pub struct LoadedModel {
    pub model: TrainedModel,
    pub background: BackgroundModel<f64>,
    pub digest: String,
}

pub struct ServiceState {
    pub loaded: Option<LoadedModel>,
    pub started: Instant,
    pub body_limit: usize,
}

#[derive(Serialize)]
struct HealthBody {
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    case: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model_digest: Option<String>,
    uptime_seconds: u64,
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

pub fn router(state: Arc<ServiceState>) -> Router {
    // request bodies hold several answers; allow headroom over the
    // per-answer limit
    let request_limit = state.body_limit.saturating_mul(64).max(1024 * 1024);
    Router::new()
        .route("/predict", post(predict))
        .route("/health", get(health))
        .layer(DefaultBodyLimit::max(request_limit))
        .with_state(state)
}

async fn health(State(state): State<Arc<ServiceState>>) -> Response {
    let uptime = state.started.elapsed().as_secs();
    let body = match &state.loaded {
        Some(loaded) => HealthBody {
            status: "ok",
            case: Some(loaded.model.case.index()),
            model_digest: Some(loaded.digest.clone()),
            uptime_seconds: uptime,
        },
        None => HealthBody {
            status: "degraded",
            case: None,
            model_digest: None,
            uptime_seconds: uptime,
        },
    };
    Json(body).into_response()
}

async fn predict(
    State(state): State<Arc<ServiceState>>,
    Json(request): Json<PredictRequest>,
) -> Response {
    let Some(loaded) = &state.loaded else {
        return error_response(StatusCode::SERVICE_UNAVAILABLE, "no model loaded".into());
    };
    match handle_predict(&request, &loaded.model, &loaded.background, state.body_limit) {
        Ok(response) => Json(response).into_response(),
        Err(err) => {
            let status = match err {
                PredictError::Model(_) | PredictError::Discretise(_) => {
                    StatusCode::INTERNAL_SERVER_ERROR
                }
                _ => StatusCode::UNPROCESSABLE_ENTITY,
            };
            error_response(status, err.to_string())
        }
    }
}

fn error_response(status: StatusCode, error: String) -> Response {
    (status, Json(ErrorBody { error })).into_response()
}

pub async fn serve(addr: &str, state: Arc<ServiceState>) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}
