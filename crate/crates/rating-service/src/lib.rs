//! HTTP backend for the rating study.
//!
//! Raters fetch one item at a time from their assigned batches and post one
//! rating per candidate. Ratings go to an append-only JSON-lines log that is
//! replayed on start; `/api/export.csv` compacts it to the ratings CSV.

use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use miboost_core::agreement::RatingBatch;
use miboost_core::corpus::{write_ratings_to, LIKERT_MAX};
use miboost_core::RatingRecord;

pub const PORT_ENV: &str = "MI_RATING_PORT";
pub const DEFAULT_PORT: u16 = 8080;
pub const RATER_HEADER: &str = "x-rater-id";

pub const LOW_ANCHOR: &str = "Not at all";
pub const HIGH_ANCHOR: &str = "Yes it is";

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Log {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid study: {0}")]
    Study(String),
}

/// Immutable batch data with the per-rater assignment.
#[derive(Debug)]
pub struct Study {
    batches: Vec<RatingBatch>,
    by_rater: HashMap<String, Vec<usize>>,
}

impl Study {
    pub fn new(batches: Vec<RatingBatch>) -> Result<Self, ServiceError> {
        let mut by_rater: HashMap<String, Vec<usize>> = HashMap::new();
        let mut ids = HashSet::new();
        for (b, batch) in batches.iter().enumerate() {
            if !ids.insert(batch.batch_id.as_str()) {
                return Err(ServiceError::Study(format!("duplicate batch {}", batch.batch_id)));
            }
            let distinct: HashSet<&String> = batch.raters.iter().collect();
            if batch.raters.len() != 2 || distinct.len() != 2 {
                return Err(ServiceError::Study(format!(
                    "batch {} needs two distinct raters",
                    batch.batch_id
                )));
            }
            for r in &batch.raters {
                by_rater.entry(r.clone()).or_default().push(b);
            }
        }
        Ok(Study { batches, by_rater })
    }

    pub fn batches(&self) -> &[RatingBatch] {
        &self.batches
    }

    pub fn knows(&self, rater: &str) -> bool {
        self.by_rater.contains_key(rater)
    }
}

type RatedKey = (String, String, String, usize);

fn rated_key(r: &RatingRecord) -> RatedKey {
    (r.batch_id.clone(), r.rater_id.clone(), r.item_id.clone(), r.presented_position)
}

/// Accepted ratings, in arrival order, with the optional log they mirror.
#[derive(Debug, Default)]
pub struct Store {
    records: Vec<RatingRecord>,
    rated: HashSet<RatedKey>,
    log: Option<(PathBuf, File)>,
}

impl Store {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (creating if needed) the log at `path` and replays it against
    /// `study`. A record that does not fit the study aborts the start.
    pub fn open(path: impl AsRef<Path>, study: &Study) -> Result<Self, ServiceError> {
        let path = path.as_ref().to_path_buf();
        let io = |source| ServiceError::Io { path: path.clone(), source };
        let mut store = Store::default();
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(io)?);
            for (n, line) in reader.lines().enumerate() {
                let line = line.map_err(io)?;
                if line.trim().is_empty() {
                    continue;
                }
                let fail = |message: String| ServiceError::Log {
                    path: path.clone(),
                    line: n + 1,
                    message,
                };
                let record: RatingRecord = serde_json::from_str(&line).map_err(|e| fail(e.to_string()))?;
                check_fits(study, &record).map_err(fail)?;
                if !store.rated.insert(rated_key(&record)) {
                    return Err(fail("duplicate rating".into()));
                }
                store.records.push(record);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        store.log = Some((path, file));
        Ok(store)
    }

    pub fn records(&self) -> &[RatingRecord] {
        &self.records
    }

    fn append(&mut self, record: RatingRecord) -> std::io::Result<()> {
        if let Some((_, file)) = &mut self.log {
            let mut line = serde_json::to_string(&record).map_err(std::io::Error::other)?;
            line.push('\n');
            file.write_all(line.as_bytes())?;
            file.sync_data()?;
        }
        self.rated.insert(rated_key(&record));
        self.records.push(record);
        Ok(())
    }

    fn is_rated(&self, batch: &str, rater: &str, item: &str, position: usize) -> bool {
        self.rated
            .contains(&(batch.to_owned(), rater.to_owned(), item.to_owned(), position))
    }

    /// Ratings CSV sorted by (batch, rater, item, presented position).
    pub fn export_csv(&self) -> Vec<u8> {
        let mut rows = self.records.clone();
        rows.sort_by(|a, b| {
            (&a.batch_id, &a.rater_id, &a.item_id, a.presented_position)
                .cmp(&(&b.batch_id, &b.rater_id, &b.item_id, b.presented_position))
        });
        let mut out = Vec::new();
        write_ratings_to(&rows, &mut out).expect("writing CSV to memory");
        out
    }
}

fn check_fits(study: &Study, r: &RatingRecord) -> Result<(), String> {
    r.validate().map_err(|e| e.to_string())?;
    let batch = study
        .batches
        .iter()
        .find(|b| b.batch_id == r.batch_id)
        .ok_or_else(|| format!("unknown batch {}", r.batch_id))?;
    if !batch.raters.contains(&r.rater_id) {
        return Err(format!("rater {} not assigned to {}", r.rater_id, r.batch_id));
    }
    let item = batch
        .items
        .iter()
        .find(|i| i.item_id == r.item_id)
        .ok_or_else(|| format!("item {} not in {}", r.item_id, r.batch_id))?;
    if r.presented_position >= item.candidates.len() {
        return Err(format!("position {} out of range", r.presented_position));
    }
    Ok(())
}

/// Where a rater stands: the first item in their assigned batches with an
/// unrated candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionState {
    pub rater_id: String,
    pub batch_id: Option<String>,
    /// Index of the next unrated item within the current batch.
    pub cursor: usize,
    /// Completion flag per assigned batch, in assignment order.
    pub completed: Vec<(String, bool)>,
}

fn cursor(study: &Study, store: &Store, rater: &str) -> Option<(usize, usize)> {
    for &b in study.by_rater.get(rater)? {
        let batch = &study.batches[b];
        for (k, item) in batch.items.iter().enumerate() {
            if item
                .candidates
                .iter()
                .any(|c| !store.is_rated(&batch.batch_id, rater, &item.item_id, c.position))
            {
                return Some((b, k));
            }
        }
    }
    None
}

pub fn session(study: &Study, store: &Store, rater: &str) -> Option<SessionState> {
    let assigned = study.by_rater.get(rater)?;
    let current = cursor(study, store, rater);
    let completed = assigned
        .iter()
        .map(|&b| {
            let batch = &study.batches[b];
            let done = batch.items.iter().all(|i| {
                i.candidates
                    .iter()
                    .all(|c| store.is_rated(&batch.batch_id, rater, &i.item_id, c.position))
            });
            (batch.batch_id.clone(), done)
        })
        .collect();
    Some(SessionState {
        rater_id: rater.to_owned(),
        batch_id: current.map(|(b, _)| study.batches[b].batch_id.clone()),
        cursor: current.map_or(0, |(_, k)| k),
        completed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub prompt: String,
    pub min: u8,
    pub max: u8,
    pub low_anchor: String,
    pub high_anchor: String,
}

pub fn questions() -> Vec<Question> {
    let q = |id: &str, prompt: &str| Question {
        id: id.into(),
        prompt: prompt.into(),
        min: 0,
        max: LIKERT_MAX,
        low_anchor: LOW_ANCHOR.into(),
        high_anchor: HIGH_ANCHOR.into(),
    };
    vec![
        q("style_strength", "Is the rephrased sentence indicative of Advise with permission?"),
        q("semantic_similarity", "Does the rephrased sentence preserve the original context?"),
    ]
}

/// Candidate as sent to the client: no system name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateView {
    pub candidate_id: String,
    pub text: String,
    pub rated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemPayload {
    pub batch_id: String,
    pub item_id: String,
    /// Zero-based index of this item in the batch.
    pub index: usize,
    pub batch_size: usize,
    pub original: String,
    pub candidates: Vec<CandidateView>,
    pub questions: Vec<Question>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingSubmission {
    pub item_id: String,
    pub candidate_id: String,
    pub style_strength: i64,
    pub semantic_similarity: i64,
}

#[derive(Clone)]
pub struct AppState {
    study: Arc<Study>,
    store: Arc<Mutex<Store>>,
}

impl AppState {
    pub fn new(study: Study, store: Store) -> Self {
        AppState {
            study: Arc::new(study),
            store: Arc::new(Mutex::new(store)),
        }
    }

    pub fn records(&self) -> Vec<RatingRecord> {
        self.store.lock().unwrap().records().to_vec()
    }
}

#[derive(Debug, Deserialize)]
struct RaterQuery {
    rater: Option<String>,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(serde_json::json!({ "error": message.into() }))).into_response()
}

fn rater_of(query: &RaterQuery, headers: &HeaderMap) -> Option<String> {
    query.rater.clone().or_else(|| {
        headers
            .get(RATER_HEADER)
            .and_then(|v| v.to_str().ok())
            .map(str::to_owned)
    })
}

async fn next_item(State(state): State<AppState>, Query(q): Query<RaterQuery>, headers: HeaderMap) -> Response {
    let Some(rater) = rater_of(&q, &headers) else {
        return error(StatusCode::BAD_REQUEST, "missing rater id");
    };
    if !state.study.knows(&rater) {
        return error(StatusCode::NOT_FOUND, format!("unknown rater {rater}"));
    }
    let store = state.store.lock().unwrap();
    let Some((b, k)) = cursor(&state.study, &store, &rater) else {
        return StatusCode::NO_CONTENT.into_response();
    };
    let batch = &state.study.batches[b];
    let item = &batch.items[k];
    let payload = ItemPayload {
        batch_id: batch.batch_id.clone(),
        item_id: item.item_id.clone(),
        index: k,
        batch_size: batch.items.len(),
        original: item.original.clone(),
        candidates: item
            .candidates
            .iter()
            .map(|c| CandidateView {
                candidate_id: c.candidate_id.clone(),
                text: c.text.clone(),
                rated: store.is_rated(&batch.batch_id, &rater, &item.item_id, c.position),
            })
            .collect(),
        questions: questions(),
    };
    Json(payload).into_response()
}

async fn session_state(State(state): State<AppState>, Query(q): Query<RaterQuery>, headers: HeaderMap) -> Response {
    let Some(rater) = rater_of(&q, &headers) else {
        return error(StatusCode::BAD_REQUEST, "missing rater id");
    };
    let store = state.store.lock().unwrap();
    match session(&state.study, &store, &rater) {
        Some(s) => Json(s).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("unknown rater {rater}")),
    }
}

async fn post_rating(
    State(state): State<AppState>,
    Query(q): Query<RaterQuery>,
    headers: HeaderMap,
    Json(sub): Json<RatingSubmission>,
) -> Response {
    let Some(rater) = rater_of(&q, &headers) else {
        return error(StatusCode::BAD_REQUEST, "missing rater id");
    };
    if !state.study.knows(&rater) {
        return error(StatusCode::NOT_FOUND, format!("unknown rater {rater}"));
    }
    let range = 0..=LIKERT_MAX as i64;
    for (name, v) in [("style_strength", sub.style_strength), ("semantic_similarity", sub.semantic_similarity)] {
        if !range.contains(&v) {
            return error(
                StatusCode::UNPROCESSABLE_ENTITY,
                format!("{name} must be an integer in 0..={LIKERT_MAX}, got {v}"),
            );
        }
    }
    let mut store = state.store.lock().unwrap();
    let Some((b, k)) = cursor(&state.study, &store, &rater) else {
        return error(StatusCode::CONFLICT, "all assigned batches are complete");
    };
    let batch = &state.study.batches[b];
    let item = &batch.items[k];
    if item.item_id != sub.item_id {
        return error(
            StatusCode::CONFLICT,
            format!("item {} is not the current item ({})", sub.item_id, item.item_id),
        );
    }
    let Some(cand) = item.candidates.iter().find(|c| c.candidate_id == sub.candidate_id) else {
        return error(
            StatusCode::CONFLICT,
            format!("candidate {} does not belong to item {}", sub.candidate_id, item.item_id),
        );
    };
    if store.is_rated(&batch.batch_id, &rater, &item.item_id, cand.position) {
        return error(StatusCode::CONFLICT, format!("candidate {} already rated", sub.candidate_id));
    }
    let record = RatingRecord {
        item_id: item.item_id.clone(),
        rater_id: rater,
        style_strength: sub.style_strength as u8,
        semantic_similarity: sub.semantic_similarity as u8,
        batch_id: batch.batch_id.clone(),
        presented_position: cand.position,
    };
    if let Err(e) = store.append(record.clone()) {
        log::error!("rating log write failed: {e}");
        return error(StatusCode::INTERNAL_SERVER_ERROR, "could not persist rating");
    }
    (StatusCode::CREATED, Json(record)).into_response()
}

async fn export(State(state): State<AppState>) -> Response {
    let body = state.store.lock().unwrap().export_csv();
    ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], body).into_response()
}

/// API routes, plus static files from `static_dir` for everything else.
pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/batches/next", get(next_item))
        .route("/api/session", get(session_state))
        .route("/api/ratings", post(post_rating))
        .route("/api/export.csv", get(export))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

/// Port from `MI_RATING_PORT`, else the default.
pub fn port_from_env() -> Result<u16, ServiceError> {
    match std::env::var(PORT_ENV) {
        Ok(v) => v
            .parse()
            .map_err(|_| ServiceError::Study(format!("{PORT_ENV}={v:?} is not a port number"))),
        Err(_) => Ok(DEFAULT_PORT),
    }
}

/// Binds and serves until the process ends.
pub async fn serve(addr: SocketAddr, state: AppState, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("rating service listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state, static_dir.as_deref())).await
}
