//! HTTP scoring service.
//!
//! | route | method | body |
//! |---|---|---|
//! | `/api/score` | POST multipart, one WAV part, at most 32 MiB | `ScoreResponse` |
//! | `/api/profile` | GET | the active quality profile (canonical JSON) |
//! | `/api/pianos` | GET | the seven labels |
//! | `/api/health` | GET | `{"status":"ok","model_id":...}`, 503 until the model is loaded |
//!
//! Every non-2xx response carries `{"error": <code>, "detail": <message>}`.

use std::future::IntoFuture;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use axum::extract::multipart::MultipartRejection;
use axum::extract::{DefaultBodyLimit, Multipart, State};
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use tower_http::cors::CorsLayer;

use crate::audio::decode_wav;
use crate::classifier::{checkpoint, MicroCnn};
use crate::error::{ClassifierError, Error};
use crate::pipeline;
use crate::scoring::QualityProfile;
use crate::PIANO_LABELS;

/// Upload size limit for `/api/score`.
pub const MAX_UPLOAD_BYTES: usize = 32 * 1024 * 1024;

struct LoadedModel {
    model: MicroCnn,
    model_id: String,
}

/// Shared, read-only service state. The model slot is filled once.
pub struct ServiceState {
    model: OnceLock<LoadedModel>,
    profile: QualityProfile,
}

impl ServiceState {
    /// State with no model yet; health reports 503 until [`ServiceState::set_model`].
    pub fn new(profile: QualityProfile) -> Arc<Self> {
        Arc::new(Self {
            model: OnceLock::new(),
            profile,
        })
    }

    pub fn with_model(model: MicroCnn, profile: QualityProfile) -> Arc<Self> {
        let state = Self::new(profile);
        state.set_model(model);
        state
    }

    /// Installs the model; returns false if one was already installed.
    pub fn set_model(&self, model: MicroCnn) -> bool {
        let model_id = checkpoint::model_id(&model);
        self.model.set(LoadedModel { model, model_id }).is_ok()
    }

    pub fn is_ready(&self) -> bool {
        self.model.get().is_some()
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: &'static str,
    detail: String,
}

struct ApiError(StatusCode, &'static str, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.1,
            detail: self.2,
        };
        (self.0, Json(body)).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match &e {
            Error::Classifier(ClassifierError::TooShort) => {
                ApiError(StatusCode::UNPROCESSABLE_ENTITY, "clip_too_short", e.to_string())
            }
            Error::Audio(_) => ApiError(StatusCode::BAD_REQUEST, "bad_audio", e.to_string()),
            _ => ApiError(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
        }
    }
}

/// The service router. `dev_cors` adds permissive cross-origin headers.
pub fn router(state: Arc<ServiceState>, dev_cors: bool) -> Router {
    let app = Router::new()
        .route(
            "/api/score",
            post(score).layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES)),
        )
        .route("/api/profile", get(profile))
        .route("/api/pianos", get(pianos))
        .route("/api/health", get(health))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(state);
    if dev_cors {
        app.layer(CorsLayer::permissive())
    } else {
        app
    }
}

async fn not_found(uri: Uri) -> ApiError {
    ApiError(StatusCode::NOT_FOUND, "not_found", format!("no route for {}", uri.path()))
}

async fn method_not_allowed(uri: Uri) -> ApiError {
    ApiError(
        StatusCode::METHOD_NOT_ALLOWED,
        "method_not_allowed",
        format!("method not allowed on {}", uri.path()),
    )
}

async fn health(State(state): State<Arc<ServiceState>>) -> Result<Response, ApiError> {
    match state.model.get() {
        Some(m) => Ok(Json(serde_json::json!({"status": "ok", "model_id": m.model_id})).into_response()),
        None => Err(ApiError(
            StatusCode::SERVICE_UNAVAILABLE,
            "not_ready",
            "model is still loading".into(),
        )),
    }
}

async fn profile(State(state): State<Arc<ServiceState>>) -> Response {
    (
        [(header::CONTENT_TYPE, "application/json")],
        state.profile.canonical_json().to_string(),
    )
        .into_response()
}

async fn pianos() -> Json<[&'static str; 7]> {
    Json(PIANO_LABELS)
}

async fn score(
    State(state): State<Arc<ServiceState>>,
    multipart: Result<Multipart, MultipartRejection>,
) -> Result<Response, ApiError> {
    let mut multipart = multipart.map_err(|e| ApiError(StatusCode::BAD_REQUEST, "bad_upload", e.body_text()))?;
    let upload_error = |e: axum::extract::multipart::MultipartError| {
        let status = e.status();
        let code = if status == StatusCode::PAYLOAD_TOO_LARGE {
            "payload_too_large"
        } else {
            "bad_upload"
        };
        ApiError(status, code, e.body_text())
    };
    let mut upload = None;
    while let Some(field) = multipart.next_field().await.map_err(upload_error)? {
        let name = field
            .file_name()
            .or(field.name())
            .unwrap_or("upload")
            .to_string();
        let bytes = field.bytes().await.map_err(upload_error)?;
        if upload.is_none() && !bytes.is_empty() {
            upload = Some((name, bytes));
        }
    }
    let (name, bytes) = upload.ok_or_else(|| {
        ApiError(StatusCode::BAD_REQUEST, "bad_upload", "no file part in the upload".into())
    })?;
    let task = tokio::task::spawn_blocking(move || -> Result<Option<String>, Error> {
        let Some(loaded) = state.model.get() else {
            return Ok(None);
        };
        let stem = std::path::Path::new(&name)
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("upload")
            .to_string();
        let clip = decode_wav(&bytes, stem)?;
        let response = pipeline::score_clip_with_id(&loaded.model, &loaded.model_id, &state.profile, &clip)?;
        Ok(Some(pipeline::to_json(&response)))
    });
    let body = task
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??
        .ok_or_else(|| {
            ApiError(StatusCode::SERVICE_UNAVAILABLE, "not_ready", "model is still loading".into())
        })?;
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

/// Options for [`serve`].
#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub model_path: PathBuf,
    pub profile: QualityProfile,
    pub addr: SocketAddr,
    pub dev_cors: bool,
}

/// Binds, loads the model in the background and serves until Ctrl-C.
pub async fn serve(config: ServeConfig) -> Result<(), Error> {
    let state = ServiceState::new(config.profile);
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    eprintln!("pianoq: listening on http://{}", listener.local_addr()?);
    let loader = state.clone();
    let path = config.model_path;
    let load = tokio::task::spawn_blocking(move || -> Result<(), Error> {
        let model = checkpoint::load(&path)?;
        loader.set_model(model);
        Ok(())
    });
    let app = router(state, config.dev_cors);
    let server = tokio::spawn(
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .into_future(),
    );
    match load.await {
        Ok(Ok(())) => eprintln!("pianoq: model loaded"),
        Ok(Err(e)) => {
            server.abort();
            return Err(e);
        }
        Err(e) => {
            server.abort();
            return Err(Error::Input(format!("model loader failed: {e}")));
        }
    }
    server.await.map_err(|e| Error::Input(format!("server task failed: {e}")))??;
    Ok(())
}
