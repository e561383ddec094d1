use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::events::{to_ndjson, EventRecord};
use super::session::{ChoiceFeedback, Condition, Session, TerminationOutcome, TrialView, TutorConfig};
use crate::env::{MetaAction, ProblemConfig};
use crate::error::{Error, Result};

pub const API_SCHEMA_VERSION: u32 = 1;

/// Registry of live sessions. Each session sits behind its own lock, so
/// requests to one session are serialized while different sessions proceed
/// independently.
#[derive(Debug)]
pub struct TutorService {
    config: ProblemConfig,
    tutor: TutorConfig,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

impl TutorService {
    pub fn new(config: ProblemConfig, tutor: TutorConfig) -> Result<Self> {
        tutor.validate()?;
        Ok(TutorService {
            config,
            tutor,
            sessions: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &ProblemConfig {
        &self.config
    }

    pub fn tutor_config(&self) -> &TutorConfig {
        &self.tutor
    }

    pub fn create_session(&self, condition: Condition, seed: u64) -> Result<String> {
        let id = uuid::Uuid::new_v4().to_string();
        let session = Session::new(id.clone(), condition, seed, self.config.clone(), self.tutor)?;
        self.sessions
            .lock()
            .expect("registry lock")
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.lock().expect("registry lock").keys().cloned().collect();
        ids.sort();
        ids
    }

    /// Runs `f` with exclusive access to one session.
    pub fn with_session<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> Result<T>) -> Result<T> {
        let session = self
            .sessions
            .lock()
            .expect("registry lock")
            .get(id)
            .cloned()
            .ok_or_else(|| Error::UnknownSession(id.to_string()))?;
        let mut guard = session.lock().expect("session lock");
        f(&mut guard)
    }

    pub fn trial_view(&self, id: &str) -> Result<TrialView> {
        self.with_session(id, |s| Ok(s.view()))
    }

    pub fn submit_choice(&self, id: &str, action: MetaAction) -> Result<ChoiceFeedback> {
        self.with_session(id, |s| s.submit_choice(action))
    }

    pub fn submit_termination(&self, id: &str) -> Result<TerminationOutcome> {
        self.with_session(id, |s| s.submit_termination())
    }

    pub fn export_log(&self, id: &str) -> Result<Vec<EventRecord>> {
        self.with_session(id, |s| Ok(s.events().to_vec()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    pub condition: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSessionResponse {
    pub session_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChoiceRequest {
    pub action: MetaAction,
}

/// Response envelope carrying the API schema version.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: T,
}

fn versioned<T>(body: T) -> Json<Versioned<T>> {
    Json(Versioned {
        schema_version: API_SCHEMA_VERSION,
        body,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            Error::UnknownSession(_) => StatusCode::NOT_FOUND,
            Error::Protocol(_) => StatusCode::CONFLICT,
            Error::UnknownCondition(_) | Error::Json(_) | Error::InvalidConfig { .. } => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = versioned(ErrorBody {
            error: self.0.to_string(),
        });
        (status, body).into_response()
    }
}

type Shared = Arc<TutorService>;

async fn create_session(
    State(svc): State<Shared>,
    Json(req): Json<CreateSessionRequest>,
) -> Result<(StatusCode, Json<Versioned<CreateSessionResponse>>), ApiError> {
    let condition: Condition = req.condition.parse()?;
    let session_id = svc.create_session(condition, req.seed)?;
    Ok((StatusCode::CREATED, versioned(CreateSessionResponse { session_id })))
}

async fn get_trial(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Json<Versioned<TrialView>>, ApiError> {
    Ok(versioned(svc.trial_view(&id)?))
}

async fn post_choice(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<ChoiceRequest>,
) -> Result<Json<Versioned<ChoiceFeedback>>, ApiError> {
    Ok(versioned(svc.submit_choice(&id, req.action)?))
}

async fn post_terminate(
    State(svc): State<Shared>,
    Path(id): Path<String>,
) -> Result<Json<Versioned<TerminationOutcome>>, ApiError> {
    Ok(versioned(svc.submit_termination(&id)?))
}

async fn get_log(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let body = to_ndjson(&svc.export_log(&id)?)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

/// `POST /sessions`, `GET /sessions/{id}/trial`, `POST /sessions/{id}/choice`,
/// `POST /sessions/{id}/terminate`, `GET /sessions/{id}/log`.
pub fn router(service: Arc<TutorService>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/trial", get(get_trial))
        .route("/sessions/{id}/choice", post(post_choice))
        .route("/sessions/{id}/terminate", post(post_terminate))
        .route("/sessions/{id}/log", get(get_log))
        .with_state(service)
}

/// Serves the API on `addr` until the process ends.
pub async fn serve(service: Arc<TutorService>, addr: SocketAddr) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(service)).await?;
    Ok(())
}
