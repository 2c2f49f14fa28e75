//! HTTP screening service.
//!
//! | route                   | success | errors                                   |
//! |-------------------------|---------|------------------------------------------|
//! | `GET /health`           | 200     | 503 while no model is loaded             |
//! | `GET /catalog?locale=`  | 200     | 400 for an unsupported locale            |
//! | `POST /screen`          | 200     | 400 malformed JSON, 422 bad answers, 503 |
//!
//! The model and catalog are fixed at startup and requests never write any
//! state, so handlers run fully concurrently. Submitted answers are not
//! stored or logged.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::artifact::ModelArtifact;
use crate::catalog::{CatalogError, Locale, QuestionCatalog};
use crate::classifiers::label_from_proba;
use crate::data::label_name;

struct LoadedModel {
    artifact: ModelArtifact,
    /// Catalog items for the model's mask.
    catalog: QuestionCatalog,
}

/// Immutable state shared by all handlers.
pub struct ServiceState {
    model: Option<LoadedModel>,
    catalog: QuestionCatalog,
    full_catalog: bool,
    started: Instant,
}

impl ServiceState {
    /// Fails when the catalog lacks an item for one of the model's features.
    /// With `full_catalog`, `GET /catalog` lists every item rather than the
    /// model's mask.
    pub fn new(artifact: Option<ModelArtifact>, catalog: QuestionCatalog, full_catalog: bool) -> Result<Self, CatalogError> {
        let model = match artifact {
            Some(artifact) => {
                let restricted = catalog.restrict(artifact.mask())?;
                Some(LoadedModel { artifact, catalog: restricted })
            }
            None => None,
        };
        Ok(ServiceState { model, catalog, full_catalog, started: Instant::now() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningRequest {
    /// Feature code to answer: an option label, its encoding, or a number.
    pub answers: BTreeMap<String, Value>,
    #[serde(default)]
    pub catalog_version: Option<String>,
    #[serde(default)]
    pub locale: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub family: String,
    pub spec: String,
    pub format_version: u32,
    pub schema_hash: String,
    pub catalog_version: String,
    pub features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningResponse {
    pub label: String,
    pub probability_asd: f64,
    pub probability_td: f64,
    pub model: ModelInfo,
    pub disclaimer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldProblem {
    pub code: String,
    pub problem: String,
}

fn error(status: StatusCode, body: Value) -> Response {
    (status, Json(body)).into_response()
}

fn unavailable() -> Response {
    error(StatusCode::SERVICE_UNAVAILABLE, json!({"error": "no screening model is loaded"}))
}

fn model_info(m: &LoadedModel) -> ModelInfo {
    let h = &m.artifact.header;
    ModelInfo {
        family: h.spec.family.code().to_string(),
        spec: h.spec.describe(),
        format_version: h.format_version,
        schema_hash: h.schema_hash.clone(),
        catalog_version: m.catalog.version.clone(),
        features: m.artifact.mask().to_vec(),
    }
}

async fn health(State(state): State<Arc<ServiceState>>) -> Response {
    let uptime = state.started.elapsed().as_secs_f64();
    match &state.model {
        Some(m) => Json(json!({
            "status": "ok",
            "model": model_info(m),
            "catalog_version": state.catalog.version,
            "uptime_seconds": uptime,
        }))
        .into_response(),
        None => error(
            StatusCode::SERVICE_UNAVAILABLE,
            json!({"status": "unavailable", "catalog_version": state.catalog.version, "uptime_seconds": uptime}),
        ),
    }
}

#[derive(Debug, Deserialize)]
struct CatalogQuery {
    locale: Option<String>,
}

async fn catalog(State(state): State<Arc<ServiceState>>, Query(q): Query<CatalogQuery>) -> Response {
    let locale = match q.locale.as_deref().unwrap_or("en").parse::<Locale>() {
        Ok(l) => l,
        Err(message) => return error(StatusCode::BAD_REQUEST, json!({"error": message, "supported": Locale::SUPPORTED})),
    };
    let (items, mask) = match (&state.model, state.full_catalog) {
        (Some(m), false) => (&m.catalog, m.artifact.mask().to_vec()),
        (Some(m), true) => (&state.catalog, m.artifact.mask().to_vec()),
        (None, _) => (&state.catalog, state.catalog.codes()),
    };
    Json(items.localized(locale, &mask)).into_response()
}

/// Encodes a request in mask order, or lists every problem found.
fn encode_request(m: &LoadedModel, req: &ScreeningRequest) -> Result<Vec<f64>, Vec<FieldProblem>> {
    let mut problems = Vec::new();
    if let Some(v) = &req.catalog_version {
        if *v != m.catalog.version {
            problems.push(FieldProblem {
                code: "catalog_version".into(),
                problem: format!("model serves catalog {}, request targets {v}", m.catalog.version),
            });
        }
    }
    let mask = m.artifact.mask();
    let mut row = Vec::with_capacity(mask.len());
    for code in mask {
        let item = m.catalog.item(code).expect("catalog restricted to the mask at startup");
        match req.answers.get(code) {
            None => problems.push(FieldProblem { code: code.clone(), problem: "missing answer".into() }),
            Some(answer) => match item.encode(answer) {
                Ok(v) => row.push(v),
                Err(problem) => problems.push(FieldProblem { code: code.clone(), problem: format!("invalid answer {answer}: {problem}") }),
            },
        }
    }
    for code in req.answers.keys() {
        if !mask.contains(code) {
            problems.push(FieldProblem { code: code.clone(), problem: "not a question of this model".into() });
        }
    }
    if problems.is_empty() {
        Ok(row)
    } else {
        Err(problems)
    }
}

async fn screen(State(state): State<Arc<ServiceState>>, body: Result<Json<ScreeningRequest>, JsonRejection>) -> Response {
    let Some(m) = &state.model else {
        return unavailable();
    };
    let req = match body {
        Ok(Json(r)) => r,
        Err(rejection) => return error(StatusCode::BAD_REQUEST, json!({"error": rejection.body_text()})),
    };
    let locale = match req.locale.as_deref().map(str::parse::<Locale>).transpose() {
        Ok(l) => l.unwrap_or(Locale::En),
        Err(message) => {
            return error(
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({"error": "invalid request", "fields": [FieldProblem { code: "locale".into(), problem: message }]}),
            )
        }
    };
    let row = match encode_request(m, &req) {
        Ok(row) => row,
        Err(fields) => return error(StatusCode::UNPROCESSABLE_ENTITY, json!({"error": "invalid answers", "fields": fields})),
    };
    let x = Array2::from_shape_vec((1, row.len()), row).expect("row length equals mask length");
    let p = match m.artifact.pipeline.positive_proba(x.view()) {
        Ok(p) => p[0],
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, json!({"error": e.to_string()})),
    };
    Json(ScreeningResponse {
        label: label_name(label_from_proba(p)).to_string(),
        probability_asd: p,
        probability_td: 1.0 - p,
        model: model_info(m),
        disclaimer: m.catalog.disclaimer(locale).to_string(),
    })
    .into_response()
}

pub fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/catalog", get(catalog))
        .route("/screen", post(screen))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(addr: SocketAddr, state: Arc<ServiceState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    serve_on(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}

/// Serves on an already bound listener until `shutdown` completes.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    state: Arc<ServiceState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}
