//! `/v1` HTTP API.
//!
//! Coverage and cost are computed in the request; simulations run in the
//! background and are polled through run handles.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use seamesh_core::engine::TerminalTrack;
use seamesh_core::mesh::{coverage_grid, initial_states, CoverageDocument};
use seamesh_core::model::{estimate_cost, has_errors, validate_scenario, CostLine, Cents, Finding, Scenario};
use seamesh_core::Error as CoreError;

use crate::store::{Store, StoreError, StoredScenario};
use crate::SCHEMA_VERSION;

pub const DEFAULT_RESOLUTION_M: f64 = 25.0;
pub const DEFAULT_PAGE_LIMIT: usize = 1000;
pub const MAX_PAGE_LIMIT: usize = 10_000;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
    findings: Vec<Finding>,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status, code: code.into(), message: message.into(), findings: Vec::new() }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NOT_FOUND", format!("no {what} with id {id}"))
    }

    fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn rejected(findings: Vec<Finding>) -> Self {
        let n = findings.iter().filter(|f| f.is_error()).count();
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code: "REJECTED_SCENARIO".into(),
            message: format!("scenario has {n} validation error(s)"),
            findings,
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", message)
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::RejectedScenario(findings) => ApiError::rejected(findings),
            CoreError::Json(_) | CoreError::ProjectionRange { .. } => ApiError::bad_request(e.code(), e.to_string()),
            CoreError::Io(_) => ApiError::internal(e.to_string()),
            other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, other.code(), other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({
            "schema_version": SCHEMA_VERSION,
            "error": { "code": self.code, "message": self.message },
        });
        if !self.findings.is_empty() {
            body["findings"] = json!(self.findings);
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReceipt {
    pub schema_version: u32,
    pub id: String,
    pub revision: u64,
    /// Warnings raised by validation; errors never get stored.
    pub findings: Vec<Finding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEnvelope {
    pub schema_version: u32,
    pub id: String,
    pub revision: u64,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResponse {
    pub scenario_id: String,
    pub revision: u64,
    pub covered_cells: usize,
    pub uncovered_cells: usize,
    #[serde(flatten)]
    pub grid: CoverageDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostResponse {
    pub schema_version: u32,
    pub scenario_id: String,
    pub currency: String,
    pub items: Vec<CostLine>,
    pub total: Cents,
    /// `total` formatted as dollars, e.g. "1488.76".
    pub total_usd: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateRequest {
    pub duration_s: Option<f64>,
    pub seed: Option<u64>,
    pub dt_s: Option<f64>,
    pub topology_refresh: Option<u32>,
    pub terminals: Vec<TerminalTrack>,
}

type AppState = Arc<Store>;

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/scenarios", post(create_scenario))
        .route("/v1/scenarios/{id}", get(get_scenario).put(replace_scenario))
        .route("/v1/scenarios/{id}/coverage", get(coverage))
        .route("/v1/scenarios/{id}/cost", get(cost))
        .route("/v1/scenarios/{id}/simulate", post(simulate))
        .route("/v1/runs/{id}", get(get_run))
        .route("/v1/runs/{id}/metrics", get(run_metrics))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", "no such endpoint") })
        .with_state(store)
}

/// Serves the API until the process is stopped.
pub async fn serve(addr: SocketAddr, store: Arc<Store>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("seamesh: listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store)).await
}

async fn health() -> Json<Value> {
    Json(json!({ "schema_version": SCHEMA_VERSION, "status": "ok" }))
}

fn parse_scenario(body: &Bytes) -> ApiResult<Scenario> {
    let value: Value =
        serde_json::from_slice(body).map_err(|e| ApiError::bad_request("MALFORMED_DOCUMENT", e.to_string()))?;
    Ok(Scenario::from_json_value(value)?)
}

fn checked(s: &Scenario) -> ApiResult<Vec<Finding>> {
    let findings = validate_scenario(s);
    if has_errors(&findings) {
        return Err(ApiError::rejected(findings));
    }
    Ok(findings)
}

fn lookup(store: &Store, id: &str) -> ApiResult<Arc<StoredScenario>> {
    store.get(id).ok_or_else(|| ApiError::not_found("scenario", id))
}

fn query_num<T: std::str::FromStr>(q: &HashMap<String, String>, key: &str) -> ApiResult<Option<T>> {
    q.get(key)
        .map(|v| v.parse::<T>().map_err(|_| ApiError::bad_request("BAD_QUERY", format!("invalid {key}: {v}"))))
        .transpose()
}

async fn create_scenario(State(store): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<ScenarioReceipt>)> {
    let scenario = parse_scenario(&body)?;
    let findings = checked(&scenario)?;
    let doc = store.insert(scenario).map_err(|e| ApiError::internal(e.to_string()))?;
    let receipt = ScenarioReceipt { schema_version: SCHEMA_VERSION, id: doc.id.clone(), revision: doc.revision, findings };
    Ok((StatusCode::CREATED, Json(receipt)))
}

async fn get_scenario(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ScenarioEnvelope>> {
    let doc = lookup(&store, &id)?;
    Ok(Json(ScenarioEnvelope {
        schema_version: SCHEMA_VERSION,
        id: doc.id.clone(),
        revision: doc.revision,
        scenario: doc.scenario.clone(),
    }))
}

async fn replace_scenario(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
    body: Bytes,
) -> ApiResult<Json<ScenarioReceipt>> {
    lookup(&store, &id)?;
    let revision = query_num::<u64>(&q, "revision")?;
    let scenario = parse_scenario(&body)?;
    let findings = checked(&scenario)?;
    let doc = store.replace(&id, scenario, revision).map_err(|e| match e {
        StoreError::NotFound => ApiError::not_found("scenario", &id),
        StoreError::RevisionMismatch { current } => ApiError::new(
            StatusCode::CONFLICT,
            "REVISION_MISMATCH",
            format!("scenario is at revision {current}"),
        ),
        StoreError::ActiveRuns => {
            ApiError::new(StatusCode::CONFLICT, "ACTIVE_RUNS", "scenario has simulations in progress")
        }
        StoreError::Io(e) => ApiError::internal(e.to_string()),
    })?;
    Ok(Json(ScenarioReceipt { schema_version: SCHEMA_VERSION, id: doc.id.clone(), revision: doc.revision, findings }))
}

async fn coverage(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Json<CoverageResponse>> {
    let doc = lookup(&store, &id)?;
    let resolution = query_num::<f64>(&q, "resolution")?.unwrap_or(DEFAULT_RESOLUTION_M);
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(ApiError::bad_request("BAD_QUERY", format!("invalid resolution: {resolution}")));
    }
    let grid = tokio::task::spawn_blocking(move || {
        let s = &doc.scenario;
        coverage_grid(s, &initial_states(s), resolution).map(|g| (doc, g))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?;
    let (doc, grid) = grid?;
    let covered = grid.covered_count();
    Ok(Json(CoverageResponse {
        scenario_id: doc.id.clone(),
        revision: doc.revision,
        covered_cells: covered,
        uncovered_cells: grid.cells.len() - covered,
        grid: grid.document(),
    }))
}

async fn cost(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<CostResponse>> {
    let doc = lookup(&store, &id)?;
    let report = estimate_cost(&doc.scenario, &doc.scenario.prices)?;
    Ok(Json(CostResponse {
        schema_version: SCHEMA_VERSION,
        scenario_id: doc.id.clone(),
        currency: "USD".into(),
        total_usd: report.total.to_string(),
        items: report.items,
        total: report.total,
    }))
}

async fn simulate(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<crate::store::RunHandle>)> {
    let doc = lookup(&store, &id)?;
    let req: SimulateRequest = if body.iter().all(u8::is_ascii_whitespace) {
        SimulateRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request("MALFORMED_DOCUMENT", e.to_string()))?
    };
    let mut scenario = doc.scenario.clone();
    let p = &mut scenario.sim_params;
    p.duration_s = req.duration_s.unwrap_or(p.duration_s);
    p.seed = req.seed.unwrap_or(p.seed);
    p.dt_s = req.dt_s.unwrap_or(p.dt_s);
    p.topology_refresh = req.topology_refresh.unwrap_or(p.topology_refresh);
    let run = store.start_run(&doc, scenario, req.terminals)?;
    Ok((StatusCode::ACCEPTED, Json(run.handle())))
}

async fn get_run(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<crate::store::RunHandle>> {
    let run = store.run(&id).ok_or_else(|| ApiError::not_found("run", &id))?;
    Ok(Json(run.handle()))
}

async fn run_metrics(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Json<crate::store::MetricsPage>> {
    let run = store.run(&id).ok_or_else(|| ApiError::not_found("run", &id))?;
    let from_t = query_num::<f64>(&q, "from_t")?.unwrap_or(0.0);
    let limit = query_num::<usize>(&q, "limit")?.unwrap_or(DEFAULT_PAGE_LIMIT);
    if from_t.is_nan() || limit == 0 || limit > MAX_PAGE_LIMIT {
        return Err(ApiError::bad_request("BAD_QUERY", format!("limit must be in 1..={MAX_PAGE_LIMIT}")));
    }
    Ok(Json(run.page(from_t, limit)))
}
