//! `/api/v1` routes.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{HeaderMap, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use palm_core::engagement::{hover_payload, DisplaySettings, GradeMode, HoverError, Layer, Metric};
use palm_core::ingestion::parse_survey_csv;
use palm_core::map::view;
use palm_core::stats::{render_markdown, run_comparison, InstrumentDefinition, DEFAULT_ALPHA_NORMALITY};
use palm_core::{Comparison, GradeScale, MapConfig, SnapshotStore};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::pipeline::{ingest_and_publish, InputFiles, PipelineError};

pub const ADMIN_TOKEN_HEADER: &str = "x-admin-token";
const MAX_UPLOAD: usize = 64 * 1024 * 1024;

pub struct AppState {
    pub store: Arc<SnapshotStore>,
    pub map_config: MapConfig,
    pub grade_scale: Option<GradeScale>,
    pub admin_token: Option<String>,
}

pub fn router(state: Arc<AppState>, cors_allowed_origins: &[String]) -> Router {
    let mut app = Router::new()
        .route("/api/v1/map", get(get_map))
        .route("/api/v1/courses/{id}", get(get_course))
        .route("/api/v1/snapshot", get(get_snapshot))
        .route("/api/v1/ingest", post(post_ingest))
        .route("/api/v1/analyze/survey", post(post_survey))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD))
        .with_state(state);
    if !cors_allowed_origins.is_empty() {
        let origins: Vec<HeaderValue> = cors_allowed_origins.iter().filter_map(|o| o.parse().ok()).collect();
        app = app.layer(
            CorsLayer::new()
                .allow_origin(AllowOrigin::list(origins))
                .allow_methods([Method::GET, Method::POST])
                .allow_headers(tower_http::cors::Any),
        );
    }
    app
}

/// JSON error body; carries the served snapshot id like every response.
pub struct ApiError {
    status: StatusCode,
    snapshot_id: Option<String>,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, snapshot_id: Option<String>, message: impl Into<String>) -> Self {
        Self { status, snapshot_id, body: json!({ "message": message.into() }) }
    }

    fn detailed(status: StatusCode, snapshot_id: Option<String>, message: impl Into<String>, detail: Value) -> Self {
        Self { status, snapshot_id, body: json!({ "message": message.into(), "detail": detail }) }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "snapshot_id": self.snapshot_id, "error": self.body });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn current_id(state: &AppState) -> Option<String> {
    state.store.current().map(|s| s.snapshot_id.clone())
}

fn list<T>(raw: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, String> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(s).ok_or_else(|| format!("unknown {what} {s:?}")))
        .collect()
}

/// `layers`, `metrics` and `grade_mode` on top of the defaults. An empty
/// `layers=` means the base map only.
fn settings_from(q: &HashMap<String, String>) -> Result<DisplaySettings, String> {
    let mut s = DisplaySettings::default();
    if let Some(raw) = q.get("layers") {
        s.show_layers = list(raw, "layer", Layer::parse)?.into_iter().collect();
    }
    if let Some(raw) = q.get("metrics") {
        let metrics: BTreeSet<Metric> = list(raw, "metric", Metric::parse)?.into_iter().collect();
        if metrics.is_empty() {
            return Err("metrics must name at least one metric".into());
        }
        s.metrics_included = metrics;
    }
    if let Some(raw) = q.get("grade_mode") {
        s.grade_mode = GradeMode::parse(raw).ok_or_else(|| format!("unknown grade_mode {raw:?}"))?;
    }
    Ok(s)
}

const MAP_PARAMS: [&str; 4] = ["student", "layers", "metrics", "grade_mode"];

fn check_params(q: &HashMap<String, String>, allowed: &[&str]) -> Result<(), String> {
    match q.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(format!("unknown query parameter {k:?}")),
        None => Ok(()),
    }
}

fn student(q: &HashMap<String, String>) -> Option<&str> {
    q.get("student").map(String::as_str).filter(|s| !s.is_empty())
}

async fn get_map(State(state): State<Arc<AppState>>, Query(q): Query<HashMap<String, String>>) -> ApiResult<Response> {
    let snap = state
        .store
        .current()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, None, "no snapshot has been published"))?;
    let id = Some(snap.snapshot_id.clone());
    let bad = |m: String| ApiError::new(StatusCode::BAD_REQUEST, id.clone(), m);
    check_params(&q, &MAP_PARAMS).map_err(bad)?;
    let settings = settings_from(&q).map_err(bad)?;
    let v = view(&snap, student(&q), &settings).map_err(|e| bad(e.to_string()))?;
    Ok(Json(v).into_response())
}

async fn get_course(
    State(state): State<Arc<AppState>>,
    Path(course_id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Response> {
    let snap = state
        .store
        .current()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, None, "no snapshot has been published"))?;
    let id = Some(snap.snapshot_id.clone());
    let bad = |m: String| ApiError::new(StatusCode::BAD_REQUEST, id.clone(), m);
    check_params(&q, &["student", "metrics", "grade_mode"]).map_err(bad)?;
    let settings = settings_from(&q).map_err(bad)?;
    match hover_payload(&snap.hover_sources(), &course_id, student(&q), &settings) {
        Ok(card) => Ok(Json(card).into_response()),
        Err(HoverError::UnknownCourse(c)) => {
            Err(ApiError::new(StatusCode::NOT_FOUND, id, format!("unknown course {c:?}")))
        }
        Err(e @ HoverError::Settings(_)) => Err(bad(e.to_string())),
    }
}

#[derive(Serialize)]
struct SnapshotInfo<'a> {
    snapshot_id: &'a str,
    created_at: String,
    curriculum_id: &'a str,
    config: &'a MapConfig,
    courses: usize,
    edges: usize,
    engagement_records: usize,
    grade_records: usize,
}

async fn get_snapshot(State(state): State<Arc<AppState>>) -> ApiResult<Response> {
    let snap = state
        .store
        .current()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, None, "no snapshot has been published"))?;
    let info = SnapshotInfo {
        snapshot_id: &snap.snapshot_id,
        created_at: snap.created_at.to_rfc3339(),
        curriculum_id: &snap.layout.curriculum_id,
        config: &snap.config,
        courses: snap.layout.courses.len(),
        edges: snap.layers.relevance.edges.len(),
        engagement_records: snap.engagement.len(),
        grade_records: snap.layers.grades.len(),
    };
    Ok(Json(info).into_response())
}

fn authorized(state: &AppState, headers: &HeaderMap) -> bool {
    match (&state.admin_token, headers.get(ADMIN_TOKEN_HEADER)) {
        (Some(expected), Some(given)) => given.as_bytes() == expected.as_bytes(),
        _ => false,
    }
}

async fn post_ingest(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    mut multipart: Multipart,
) -> ApiResult<Response> {
    let before = current_id(&state);
    if !authorized(&state, &headers) {
        return Err(ApiError::new(StatusCode::UNAUTHORIZED, before, "missing or wrong admin token"));
    }
    let mut files = InputFiles::default();
    let mut have_layout = false;
    let unreadable = |e: axum::extract::multipart::MultipartError| {
        ApiError::new(StatusCode::BAD_REQUEST, current_id(&state), format!("unreadable multipart body: {e}"))
    };
    while let Some(field) = multipart.next_field().await.map_err(unreadable)? {
        let name = field.name().unwrap_or_default().to_string();
        let bytes = field.bytes().await.map_err(unreadable)?.to_vec();
        match name.as_str() {
            "layout" => {
                files.layout = bytes;
                have_layout = true;
            }
            "engagement" => files.engagement = Some(bytes),
            "grades" => files.grades = Some(bytes),
            "grade_scale" => files.grade_scale = Some(bytes),
            other => {
                return Err(ApiError::new(StatusCode::BAD_REQUEST, before, format!("unexpected form field {other:?}")))
            }
        }
    }
    if !have_layout {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, before, "form field `layout` is required"));
    }

    let worker = Arc::clone(&state);
    let outcome = tokio::task::spawn_blocking(move || {
        ingest_and_publish(&worker.store, &files, &worker.map_config, worker.grade_scale.clone())
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, current_id(&state), e.to_string()))?;

    match outcome {
        Ok((summary, _)) => Ok((StatusCode::CREATED, Json(summary)).into_response()),
        Err(PipelineError::Validation(e)) => Err(ApiError::detailed(
            StatusCode::UNPROCESSABLE_ENTITY,
            current_id(&state),
            e.to_string(),
            serde_json::to_value(&e).unwrap_or(Value::Null),
        )),
        Err(e) => {
            tracing::error!(error = %e, "ingest failed");
            Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, current_id(&state), e.to_string()))
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum InstrumentChoice {
    Preset(String),
    Custom(InstrumentDefinition),
}

impl InstrumentChoice {
    pub fn resolve(&self) -> Result<InstrumentDefinition, String> {
        match self {
            InstrumentChoice::Preset(name) => {
                InstrumentDefinition::preset(name).ok_or_else(|| format!("unknown instrument {name:?}"))
            }
            InstrumentChoice::Custom(def) => Ok(def.clone()),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyRequest {
    pub instrument: InstrumentChoice,
    pub pre: String,
    pub post: String,
    pub alpha_normality: Option<f64>,
}

#[derive(Serialize)]
struct SurveyResponse {
    snapshot_id: Option<String>,
    #[serde(flatten)]
    comparison: Comparison,
    markdown: String,
}

async fn post_survey(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let id = current_id(&state);
    let bad = |status: StatusCode, m: String| ApiError::new(status, id.clone(), m);
    let req: SurveyRequest = serde_json::from_slice(&body)
        .map_err(|e| bad(StatusCode::BAD_REQUEST, format!("invalid request body: {e}")))?;
    let instrument = req.instrument.resolve().map_err(|m| bad(StatusCode::BAD_REQUEST, m))?;
    let alpha = req.alpha_normality.unwrap_or(DEFAULT_ALPHA_NORMALITY);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(bad(StatusCode::BAD_REQUEST, format!("alpha_normality must be in (0, 1), got {alpha}")));
    }
    let parse = |csv: &str| {
        parse_survey_csv(csv.as_bytes(), &instrument).map_err(|e| {
            ApiError::detailed(
                StatusCode::UNPROCESSABLE_ENTITY,
                id.clone(),
                e.to_string(),
                serde_json::to_value(&e).unwrap_or(Value::Null),
            )
        })
    };
    let (pre, post) = (parse(&req.pre)?, parse(&req.post)?);
    let comparison = run_comparison(&pre.sets, &post.sets, &instrument, alpha)
        .map_err(|e| bad(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    let markdown = render_markdown(&comparison.reports, "Pre", "Post");
    Ok(Json(SurveyResponse { snapshot_id: id, comparison, markdown }).into_response())
}
