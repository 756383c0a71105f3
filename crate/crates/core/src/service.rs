//! HTTP API for annotation sessions, versioned under `/v1/`.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | POST | `/v1/sessions` | [`CreateSession`] | [`SessionCreated`] |
//! | GET | `/v1/sessions/{id}/next` | | [`NextQuery`] |
//! | POST | `/v1/sessions/{id}/label` | [`LabelRequest`] | [`LabelOutcome`] |
//! | POST | `/v1/sessions/{id}/round` | | [`RoundSummary`] |
//! | GET | `/v1/sessions/{id}/metrics` | | [`SessionMetrics`] |
//! | GET | `/v1/corpus/{id}/stats` | | [`CorpusStats`] |
//!
//! Errors are `{"error": "..."}` with 404 for unknown sessions or corpora,
//! 422 for invalid input, 409 for a conflicting second label and 500 for
//! internal failures.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::active::{AnnotationSession, LabelOutcome, QueryView, RoundSummary, SessionConfig, SessionMetrics};
use crate::corpus::{corpus_stats, CorpusStats, RecipeRecord};
use crate::error::Error;
use crate::features::FeatureSpec;
use crate::genre::Genre;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSession {
    pub corpus: String,
    #[serde(default)]
    pub feature: Option<FeatureSpec>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub batch: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Keep gold labels on only the first `n` records of each genre and
    /// put the rest in the pool; for replaying fully labeled corpora.
    #[serde(default)]
    pub seed_per_genre: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelRequest {
    pub record_id: u64,
    pub label: u8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NextQuery {
    /// `None` when every query in the batch has been answered.
    pub query: Option<QueryView>,
    pub remaining_in_batch: usize,
    pub pool_remaining: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn not_found(message: String) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            message,
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::NotFound(_) => StatusCode::NOT_FOUND,
            Error::Conflict(_) => StatusCode::CONFLICT,
            e if e.is_user_error() => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError {
            status,
            message: e.to_string(),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            message: e.body_text(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { error: self.message })).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;
type Shared = Arc<Mutex<AnnotationSession>>;

/// Corpora are loaded once at startup and shared read-only; each session
/// sits behind its own lock so rounds in one session never block another.
pub struct AppState {
    corpora: BTreeMap<String, Arc<Vec<RecipeRecord>>>,
    defaults: SessionConfig,
    sessions: RwLock<HashMap<String, Shared>>,
    next_id: Mutex<u64>,
}

impl AppState {
    pub fn new(corpora: BTreeMap<String, Vec<RecipeRecord>>, defaults: SessionConfig) -> Self {
        AppState {
            corpora: corpora.into_iter().map(|(k, v)| (k, Arc::new(v))).collect(),
            defaults,
            sessions: RwLock::new(HashMap::new()),
            next_id: Mutex::new(0),
        }
    }

    fn corpus(&self, id: &str) -> Result<Arc<Vec<RecipeRecord>>, ApiError> {
        self.corpora
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown corpus {id:?}")))
    }

    fn session(&self, id: &str) -> Result<Shared, ApiError> {
        self.sessions
            .read()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session {id:?}")))
    }
}

/// Strips labels from all but the first `keep` records (by id) of each
/// genre.
pub fn hide_labels(records: &[RecipeRecord], keep: usize) -> Vec<RecipeRecord> {
    let mut seen = [0usize; 9];
    let mut sorted: Vec<RecipeRecord> = records.to_vec();
    sorted.sort_by_key(|r| r.id);
    for r in &mut sorted {
        if let Some(g) = r.genre {
            seen[g.index()] += 1;
            if seen[g.index()] > keep {
                r.genre = None;
                r.provenance = crate::corpus::Provenance::Unlabeled;
            }
        }
    }
    sorted
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        message: format!("worker failed: {e}"),
    })?
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: std::result::Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<SessionCreated> {
    let Json(req) = body?;
    let corpus = state.corpus(&req.corpus)?;
    let mut config = state.defaults.clone();
    if let Some(f) = req.feature {
        config.committee.feature = f;
    }
    config.tau = req.tau.unwrap_or(config.tau);
    config.batch = req.batch.unwrap_or(config.batch);
    config.seed = req.seed.unwrap_or(config.seed);
    config.validate()?;
    let st = state.clone();
    blocking(move || {
        let records = match req.seed_per_genre {
            Some(k) => hide_labels(&corpus, k),
            None => corpus.as_ref().clone(),
        };
        let session = AnnotationSession::new(records, config)?;
        let id = {
            let mut n = st.next_id.lock().expect("id lock");
            *n += 1;
            format!("s{n}")
        };
        st.sessions
            .write()
            .expect("session table lock")
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(Json(SessionCreated { session_id: id }))
    })
    .await
}

async fn next_query(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<NextQuery> {
    let shared = state.session(&id)?;
    let s = shared.lock().expect("session lock");
    let m = s.metrics();
    Ok(Json(NextQuery {
        query: s.next_query(),
        remaining_in_batch: m.queued - m.answered,
        pool_remaining: m.pool_remaining,
    }))
}

async fn submit_label(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: std::result::Result<Json<LabelRequest>, JsonRejection>,
) -> ApiResult<LabelOutcome> {
    let Json(req) = body?;
    let genre = Genre::from_id(req.label)?;
    let shared = state.session(&id)?;
    let mut s = shared.lock().expect("session lock");
    Ok(Json(s.submit_label(req.record_id, genre)?))
}

async fn run_round(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<RoundSummary> {
    let shared = state.session(&id)?;
    blocking(move || {
        let mut s = shared.lock().expect("session lock");
        Ok(Json(s.run_round(&[])?))
    })
    .await
}

async fn metrics(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<SessionMetrics> {
    let shared = state.session(&id)?;
    let s = shared.lock().expect("session lock");
    Ok(Json(s.metrics()))
}

async fn stats(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<CorpusStats> {
    Ok(Json(corpus_stats(&state.corpus(&id)?)))
}

async fn fallback() -> ApiError {
    ApiError::not_found("no such endpoint".into())
}

pub fn router(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/next", get(next_query))
        .route("/sessions/{id}/label", post(submit_label))
        .route("/sessions/{id}/round", post(run_round))
        .route("/sessions/{id}/metrics", get(metrics))
        .route("/corpus/{id}/stats", get(stats))
        .fallback(fallback)
        .with_state(state);
    let app = Router::new().nest("/v1", api);
    match static_dir {
        Some(dir) => app.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => app,
    }
}

/// Serves until ctrl-c.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>, static_dir: Option<PathBuf>) -> crate::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::io(addr.to_string(), e))?;
    log::info!(
        "listening on http://{}",
        listener.local_addr().map_err(|e| Error::io(addr.to_string(), e))?
    );
    axum::serve(listener, router(state, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::io(addr.to_string(), e))
}
