//! HTTP/JSON session service.

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use kbdbg_core::diagnosis::DiagnosisError;
use kbdbg_core::logic::{parse_kb, LogicError};
use kbdbg_core::selection::{Answer, FaultModel, Strategy};
use kbdbg_core::session::{start_session, submit_answer, SessionConfig, SessionError};
use serde::Serialize;
use serde_json::{Map, Value};
use tower_http::services::ServeDir;

use crate::store::{SessionRecord, SessionStore, StoreError};
use crate::view::StateView;

const PLACEHOLDER: &str = "<!doctype html>\n<html><head><title>kbdbg</title></head>\
<body><h1>kbdbg</h1><p>The web interface is not installed. \
The session API is available under <code>/api/sessions</code>.</p></body></html>\n";

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    column: Option<usize>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: impl ToString) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: error.to_string(),
                line: None,
                column: None,
            },
        }
    }

    fn bad_request(error: impl ToString) -> Self {
        Self::new(StatusCode::BAD_REQUEST, error)
    }

    fn unprocessable(error: impl ToString) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, error)
    }

    fn internal(error: impl ToString) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, error)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match e {
            StoreError::NotFound(_) => StatusCode::NOT_FOUND,
            StoreError::Unavailable { .. } => StatusCode::SERVICE_UNAVAILABLE,
            StoreError::Busy(_) => StatusCode::CONFLICT,
            StoreError::Io(_) | StoreError::Serialize(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e)
    }
}

impl From<LogicError> for ApiError {
    fn from(e: LogicError) -> Self {
        let mut err = Self::bad_request(&e);
        if let LogicError::Syntax(s) = &e {
            err.body.line = Some(s.line);
            err.body.column = Some(s.column);
        }
        err
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::InvalidState(_) => Self::new(StatusCode::CONFLICT, e),
            SessionError::Diagnosis(DiagnosisError::InfeasibleProblem(_)) => Self::bad_request(e),
            SessionError::InvalidParameter(_)
            | SessionError::InvalidTarget(_)
            | SessionError::Diagnosis(_)
            | SessionError::Selection(_) => Self::unprocessable(e),
            SessionError::Query(_) => Self::internal(e),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(ApiError::internal)?
}

fn json_object(body: &[u8]) -> ApiResult<Map<String, Value>> {
    match serde_json::from_slice::<Value>(body) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(ApiError::bad_request("request body must be a JSON object")),
        Err(e) => Err(ApiError::bad_request(format!("malformed JSON: {e}"))),
    }
}

/// Settings of a create request other than the KB text.
#[derive(Debug, Default)]
struct CreateParams {
    strategy: Option<String>,
    seed: Option<u64>,
    fault_model: Option<FaultModel>,
    sigma: Option<f64>,
    n_leading: Option<usize>,
}

fn parse_create(mut body: Map<String, Value>) -> ApiResult<(String, CreateParams)> {
    let kb_text = match body.remove("kb_text") {
        Some(Value::String(s)) => s,
        Some(_) => return Err(ApiError::bad_request("`kb_text` must be a string")),
        None => return Err(ApiError::bad_request("missing field `kb_text`")),
    };
    let mut p = CreateParams::default();
    for (key, value) in body {
        if value.is_null() {
            continue;
        }
        let invalid = |what: &str| ApiError::unprocessable(format!("`{key}` must be {what}"));
        match key.as_str() {
            "strategy" => {
                p.strategy = Some(
                    value
                        .as_str()
                        .ok_or_else(|| invalid("a string"))?
                        .to_string(),
                )
            }
            "seed" => {
                p.seed = Some(
                    value
                        .as_u64()
                        .ok_or_else(|| invalid("a non-negative integer"))?,
                )
            }
            "sigma" => p.sigma = Some(value.as_f64().ok_or_else(|| invalid("a number"))?),
            "n_leading" => {
                let n = value
                    .as_u64()
                    .ok_or_else(|| invalid("a positive integer"))?;
                p.n_leading = Some(usize::try_from(n).map_err(|_| invalid("a positive integer"))?);
            }
            "fault_model" => {
                let fm: FaultModel = serde_json::from_value(value)
                    .map_err(|e| ApiError::unprocessable(format!("invalid `fault_model`: {e}")))?;
                p.fault_model = Some(fm);
            }
            _ => return Err(ApiError::unprocessable(format!("unknown field `{key}`"))),
        }
    }
    Ok((kb_text, p))
}

fn config_of(p: &CreateParams) -> ApiResult<SessionConfig> {
    let mut config = SessionConfig::default();
    if let Some(s) = &p.strategy {
        config.strategy = s.parse::<Strategy>().map_err(ApiError::unprocessable)?;
    }
    if let (Some(seed), Strategy::Random { .. }) = (p.seed, config.strategy) {
        config.strategy = Strategy::Random { seed };
    }
    if let Some(fm) = p.fault_model {
        config.fault_model = fm;
    }
    if let Some(sigma) = p.sigma {
        config.sigma = sigma;
    }
    if let Some(n) = p.n_leading {
        config.max_leading = n;
    }
    Ok(config)
}

/// Parses, validates and starts a session from a create request body.
pub fn create_record(body: &[u8]) -> ApiResult<SessionRecord> {
    let (kb_text, params) = parse_create(json_object(body)?)?;
    let config = config_of(&params)?;
    let kb = parse_kb(&kb_text)?;
    config.validate(&kb)?;
    let session = start_session(kb, config)?;
    Ok(SessionRecord::new(kb_text, session))
}

fn parse_answer(body: &[u8]) -> ApiResult<Answer> {
    let body = json_object(body)?;
    match body.get("answer") {
        Some(Value::String(s)) => match s.as_str() {
            "yes" => Ok(Answer::Yes),
            "no" => Ok(Answer::No),
            other => Err(ApiError::bad_request(format!(
                "answer must be \"yes\" or \"no\", got \"{other}\""
            ))),
        },
        Some(_) => Err(ApiError::bad_request("`answer` must be a string")),
        None => Err(ApiError::bad_request("missing field `answer`")),
    }
}

type Store = Arc<SessionStore>;

async fn create(
    State(store): State<Store>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<StateView>)> {
    let record = blocking(move || {
        let record = create_record(&body)?;
        Ok(store.insert(record)?)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(StateView::of(&record))))
}

async fn list(State(store): State<Store>) -> impl IntoResponse {
    Json(store.list())
}

async fn show(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<Json<StateView>> {
    Ok(Json(StateView::of(&store.get(&id)?)))
}

async fn answer(
    State(store): State<Store>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<StateView>> {
    store.get(&id)?;
    let answer = parse_answer(&body)?;
    let record = blocking(move || {
        let updated = store.update(&id, |r| {
            submit_answer(&r.session, answer).map(|session| SessionRecord {
                session,
                ..r.clone()
            })
        })?;
        Ok(updated?)
    })
    .await?;
    Ok(Json(StateView::of(&record)))
}

async fn delete(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    blocking(move || Ok(store.delete(&id)?)).await?;
    Ok(StatusCode::NO_CONTENT)
}

/// The service router. Files under `static_dir` are served at `/` when the
/// directory exists; otherwise `/` returns a short placeholder page.
pub fn router(store: Arc<SessionStore>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/sessions", get(list).post(create))
        .route("/api/sessions/{id}", get(show).delete(delete))
        .route("/api/sessions/{id}/answer", axum::routing::post(answer))
        .with_state(store);
    match static_dir.filter(|d| d.is_dir()) {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER) })),
    }
}
