//! `/v1/` HTTP session service. Each session holds uploaded inputs and
//! settings; stage runs execute as background jobs, at most one per session.
//!
//! Images travel as `{"format": "png", "width": .., "height": .., "data": <base64>}`;
//! meshes, manifests, activations and configs use the same text formats as
//! the CLI.

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use snakemorph::image::{decode_gray, encode_gray, ImageFormat};
use snakemorph::mesh::{parse_activations, parse_obj, parse_rig, write_obj};
use snakemorph::pipeline::overlay::snake_overlay;
use snakemorph::pipeline::{render_mesh, run, RunOutput};
use snakemorph::{
    ActivationVector, AlignmentTransform, BlendshapeRig, GrayImage, MeshError, PipelineConfig, PipelineError,
    Tweakables,
};
use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use uuid::Uuid;

#[derive(Default)]
pub struct AppState {
    sessions: Mutex<HashMap<Uuid, Session>>,
}

pub type Shared = Arc<AppState>;

#[derive(Default)]
struct Session {
    sketch: Option<Arc<GrayImage>>,
    rig: Option<Arc<BlendshapeRig>>,
    activations: ActivationVector,
    config: PipelineConfig,
    jobs: HashMap<Uuid, Job>,
    active: Option<Uuid>,
    mesh: Option<String>,
    report: Option<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobKind {
    Snakes,
    Deform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Running,
    Done,
    Failed,
    Cancelled,
}

struct Job {
    kind: JobKind,
    status: JobStatus,
    cancel: Arc<AtomicBool>,
    error: Option<Value>,
    result: Option<Value>,
}

impl Job {
    fn view(&self, id: Uuid) -> Value {
        json!({
            "id": id,
            "kind": self.kind,
            "status": self.status,
            "error": self.error,
            "result": self.result,
        })
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: json!({ "error": message.into() }),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn with_session<T>(state: &AppState, id: Uuid, f: impl FnOnce(&mut Session) -> ApiResult<T>) -> ApiResult<T> {
    let mut sessions = state.sessions.lock().expect("session lock");
    let session = sessions
        .get_mut(&id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session {id}")))?;
    f(session)
}

fn ensure_idle(s: &Session) -> ApiResult<()> {
    match s.active {
        Some(job) => Err(ApiError::new(
            StatusCode::CONFLICT,
            format!("job {job} is still running in this session"),
        )),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageEnvelope {
    pub format: String,
    pub width: usize,
    pub height: usize,
    pub data: String,
}

impl ImageEnvelope {
    pub fn encode(img: &GrayImage) -> ApiResult<Self> {
        let bytes = encode_gray(img, ImageFormat::Png)
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
        Ok(ImageEnvelope {
            format: "png".into(),
            width: img.width(),
            height: img.height(),
            data: B64.encode(bytes),
        })
    }
}

#[derive(Debug, Deserialize)]
pub struct ImageUpload {
    pub data: String,
}

#[derive(Debug, Deserialize)]
pub struct RigUpload {
    pub manifest: String,
    /// OBJ text keyed by the file names the manifest uses.
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
pub struct TextUpload {
    pub text: String,
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session).delete(delete_session))
        .route("/v1/sessions/{id}/sketch", axum::routing::put(put_sketch))
        .route("/v1/sessions/{id}/rig", axum::routing::put(put_rig))
        .route("/v1/sessions/{id}/activations", axum::routing::put(put_activations))
        .route("/v1/sessions/{id}/render", get(get_render))
        .route("/v1/sessions/{id}/alignment", get(get_alignment).put(put_alignment))
        .route("/v1/sessions/{id}/tweakables", get(get_tweakables).put(put_tweakables))
        .route("/v1/sessions/{id}/config", get(get_config).put(put_config))
        .route("/v1/sessions/{id}/snakes", post(start_snakes))
        .route("/v1/sessions/{id}/deform", post(start_deform))
        .route("/v1/sessions/{id}/jobs/{job}", get(get_job))
        .route("/v1/sessions/{id}/jobs/{job}/cancel", post(cancel_job))
        .route("/v1/sessions/{id}/mesh", get(get_mesh))
        .route("/v1/sessions/{id}/report", get(get_report))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    println!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Shared::default())).await
}

async fn create_session(State(state): State<Shared>) -> impl IntoResponse {
    let id = Uuid::new_v4();
    state.sessions.lock().expect("session lock").insert(id, Session::default());
    (StatusCode::CREATED, Json(json!({ "id": id })))
}

async fn get_session(State(state): State<Shared>, Path(id): Path<Uuid>) -> ApiResult<Json<Value>> {
    with_session(&state, id, |s| {
        let rig = s.rig.as_ref().map(|r| {
            json!({
                "vertices": r.base().vertices.len(),
                "max_level": r.max_level(),
                "targets": r.targets().iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
            })
        });
        let sketch = s.sketch.as_ref().map(|img| json!({ "width": img.width(), "height": img.height() }));
        let job = s.active.and_then(|j| s.jobs.get(&j).map(|job| job.view(j)));
        Ok(Json(json!({
            "id": id,
            "sketch": sketch,
            "rig": rig,
            "activations": s.activations.entries,
            "alignment": s.config.alignment,
            "tweakables": s.config.tweakables,
            "width": s.config.width,
            "height": s.config.height,
            "active_job": job,
            "has_mesh": s.mesh.is_some(),
        })))
    })
}

async fn delete_session(State(state): State<Shared>, Path(id): Path<Uuid>) -> ApiResult<StatusCode> {
    let session = state.sessions.lock().expect("session lock").remove(&id);
    let session = session.ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session {id}")))?;
    for job in session.jobs.values() {
        job.cancel.store(true, Ordering::Relaxed);
    }
    Ok(StatusCode::NO_CONTENT)
}

async fn put_sketch(
    State(state): State<Shared>,
    Path(id): Path<Uuid>,
    Json(body): Json<ImageUpload>,
) -> ApiResult<Json<Value>> {
    let bytes = B64
        .decode(body.data.trim())
        .map_err(|e| ApiError::bad_request(format!("sketch is not base64: {e}")))?;
    let img = decode_gray(&bytes).map_err(|e| ApiError::bad_request(format!("sketch: {e}")))?;
    let reply = json!({ "width": img.width(), "height": img.height() });
    with_session(&state, id, |s| {
        ensure_idle(s)?;
        s.sketch = Some(Arc::new(img));
        Ok(Json(reply))
    })
}

async fn put_rig(
    State(state): State<Shared>,
    Path(id): Path<Uuid>,
    Json(body): Json<RigUpload>,
) -> ApiResult<Json<Value>> {
    let rig = parse_rig(&body.manifest, |name| {
        let text = body.files.get(name).ok_or_else(|| MeshError::Parse {
            line: 0,
            message: format!("manifest names `{name}` but no such file was uploaded"),
        })?;
        parse_obj(text)
    })
    .map_err(|e| ApiError::bad_request(format!("rig: {e}")))?;
    let reply = json!({
        "vertices": rig.base().vertices.len(),
        "max_level": rig.max_level(),
        "targets": rig.targets().iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
    });
    with_session(&state, id, |s| {
        ensure_idle(s)?;
        s.rig = Some(Arc::new(rig));
        Ok(Json(reply))
    })
}

async fn put_activations(
    State(state): State<Shared>,
    Path(id): Path<Uuid>,
    Json(body): Json<TextUpload>,
) -> ApiResult<Json<Value>> {
    let act = parse_activations(&body.text).map_err(|e| ApiError::bad_request(format!("activations: {e}")))?;
    with_session(&state, id, |s| {
        ensure_idle(s)?;
        let reply = json!({ "activations": act.entries });
        s.activations = act;
        Ok(Json(reply))
    })
}

async fn get_render(State(state): State<Shared>, Path(id): Path<Uuid>) -> ApiResult<Json<ImageEnvelope>> {
    let (rig, act, cfg) = with_session(&state, id, |s| {
        let rig = s.rig.clone().ok_or_else(|| ApiError::bad_request("upload a rig first"))?;
        Ok((rig, s.activations.clone(), s.config.clone()))
    })?;
    let img = tokio::task::spawn_blocking(move || -> Result<GrayImage, String> {
        let posed = snakemorph::mesh::apply_blendshapes(&rig, &act).map_err(|e| e.to_string())?;
        let (_, img) = render_mesh(&posed, &cfg).map_err(|e| e.to_string())?;
        Ok(img)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    .map_err(ApiError::bad_request)?;
    Ok(Json(ImageEnvelope::encode(&img)?))
}

async fn get_alignment(State(state): State<Shared>, Path(id): Path<Uuid>) -> ApiResult<Json<AlignmentTransform>> {
    with_session(&state, id, |s| Ok(Json(s.config.alignment)))
}

async fn put_alignment(
    State(state): State<Shared>,
    Path(id): Path<Uuid>,
    Json(t): Json<AlignmentTransform>,
) -> ApiResult<Json<AlignmentTransform>> {
    t.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
    with_session(&state, id, |s| {
        ensure_idle(s)?;
        s.config.alignment = t;
        Ok(Json(t))
    })
}

async fn get_tweakables(State(state): State<Shared>, Path(id): Path<Uuid>) -> ApiResult<Json<Tweakables>> {
    with_session(&state, id, |s| Ok(Json(s.config.tweakables.clone())))
}

async fn put_tweakables(
    State(state): State<Shared>,
    Path(id): Path<Uuid>,
    Json(tw): Json<Tweakables>,
) -> ApiResult<Json<Tweakables>> {
    tw.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
    with_session(&state, id, |s| {
        ensure_idle(s)?;
        s.config.tweakables = tw.clone();
        Ok(Json(tw))
    })
}

/// The session's settings as a config file. Paths are left out; pass the
/// exported assets to the CLI with `--sketch`, `--rig` and `--activations`.
async fn get_config(State(state): State<Shared>, Path(id): Path<Uuid>) -> ApiResult<Response> {
    let text = with_session(&state, id, |s| Ok(s.config.to_text()))?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
}

async fn put_config(State(state): State<Shared>, Path(id): Path<Uuid>, text: String) -> ApiResult<Response> {
    let mut cfg = PipelineConfig::parse(&text).map_err(|e| ApiError::bad_request(format!("config: {e}")))?;
    cfg.sketch = None;
    cfg.rig = None;
    cfg.activations = None;
    cfg.out_dir = None;
    let text = cfg.to_text();
    with_session(&state, id, |s| {
        ensure_idle(s)?;
        s.config = cfg;
        Ok(())
    })?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
}

async fn start_snakes(State(state): State<Shared>, Path(id): Path<Uuid>) -> ApiResult<Response> {
    start_job(state, id, JobKind::Snakes)
}

async fn start_deform(State(state): State<Shared>, Path(id): Path<Uuid>) -> ApiResult<Response> {
    start_job(state, id, JobKind::Deform)
}

fn start_job(state: Shared, id: Uuid, kind: JobKind) -> ApiResult<Response> {
    let job_id = Uuid::new_v4();
    let cancel = Arc::new(AtomicBool::new(false));
    let (sketch, rig, act, cfg, view) = with_session(&state, id, |s| {
        ensure_idle(s)?;
        let sketch = s.sketch.clone().ok_or_else(|| ApiError::bad_request("upload a sketch first"))?;
        let rig = s.rig.clone().ok_or_else(|| ApiError::bad_request("upload a rig first"))?;
        let job = Job {
            kind,
            status: JobStatus::Running,
            cancel: cancel.clone(),
            error: None,
            result: None,
        };
        let view = job.view(job_id);
        s.jobs.insert(job_id, job);
        s.active = Some(job_id);
        if kind == JobKind::Deform {
            s.mesh = None;
            s.report = None;
        }
        Ok((sketch, rig, s.activations.clone(), s.config.clone(), view))
    })?;
    let worker_state = state.clone();
    tokio::task::spawn_blocking(move || {
        let outcome = run(&sketch, &rig, &act, &cfg, None, Some(&cancel));
        finish_job(&worker_state, id, job_id, kind, cfg.tweakables.max_delta_px, outcome);
    });
    Ok((StatusCode::ACCEPTED, Json(view)).into_response())
}

fn snakes_result(out: &RunOutput, max_delta: f64) -> Result<Value, ApiError> {
    let r = &out.report;
    let overlay = snake_overlay(&out.render, &out.batch.pairs);
    let magnitude = out
        .deltas
        .field
        .magnitude_image(out.render.width(), out.render.height(), max_delta);
    Ok(json!({
        "overlay": ImageEnvelope::encode(&overlay)?,
        "deltas": ImageEnvelope::encode(&magnitude)?,
        "stats": {
            "contours": r.contours,
            "snakes_run": r.snakes_run,
            "snakes_converged": r.snakes_converged,
            "skipped": r.skipped,
            "samples": r.samples,
            "samples_rejected": r.samples_rejected,
            "delta_pixels": r.delta_pixels,
            "max_delta": out.deltas.field.max_magnitude(),
        },
        "rejections": r.rejections,
    }))
}

fn finish_job(
    state: &AppState,
    id: Uuid,
    job_id: Uuid,
    kind: JobKind,
    max_delta: f64,
    outcome: Result<RunOutput, PipelineError>,
) {
    let mut status = JobStatus::Done;
    let mut error = None;
    let mut result = None;
    let mut mesh = None;
    let mut report = None;
    match outcome {
        Ok(out) => {
            let produced = match kind {
                JobKind::Snakes => snakes_result(&out, max_delta),
                JobKind::Deform => match write_obj(&out.mesh) {
                    Ok(obj) => {
                        let rep = serde_json::to_value(&out.report).unwrap_or(Value::Null);
                        mesh = Some(obj.clone());
                        report = Some(rep.clone());
                        Ok(json!({ "obj": obj, "report": rep }))
                    }
                    Err(e) => Err(ApiError::bad_request(e.to_string())),
                },
            };
            match produced {
                Ok(v) => result = Some(v),
                Err(e) => {
                    status = JobStatus::Failed;
                    error = Some(json!({ "stage": "save", "message": e.body["error"] }));
                }
            }
        }
        Err(e) if e.is_cancelled() => status = JobStatus::Cancelled,
        Err(e) => {
            status = JobStatus::Failed;
            error = Some(json!({ "stage": e.stage.to_string(), "message": e.source.to_string() }));
        }
    }
    let mut sessions = state.sessions.lock().expect("session lock");
    let Some(session) = sessions.get_mut(&id) else {
        return;
    };
    let Some(job) = session.jobs.get_mut(&job_id) else {
        return;
    };
    if job.cancel.load(Ordering::Relaxed) && status == JobStatus::Done {
        status = JobStatus::Cancelled;
        result = None;
        mesh = None;
        report = None;
    }
    job.status = status;
    job.error = error;
    job.result = result;
    if session.active == Some(job_id) {
        session.active = None;
    }
    if kind == JobKind::Deform {
        session.mesh = mesh;
        session.report = report;
    }
}

async fn get_job(State(state): State<Shared>, Path((id, job)): Path<(Uuid, Uuid)>) -> ApiResult<Json<Value>> {
    with_session(&state, id, |s| {
        let j = s
            .jobs
            .get(&job)
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no job {job}")))?;
        Ok(Json(j.view(job)))
    })
}

async fn cancel_job(State(state): State<Shared>, Path((id, job)): Path<(Uuid, Uuid)>) -> ApiResult<Json<Value>> {
    with_session(&state, id, |s| {
        let j = s
            .jobs
            .get(&job)
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no job {job}")))?;
        if j.status == JobStatus::Running {
            j.cancel.store(true, Ordering::Relaxed);
        }
        Ok(Json(j.view(job)))
    })
}

async fn get_mesh(State(state): State<Shared>, Path(id): Path<Uuid>) -> ApiResult<Response> {
    let obj = with_session(&state, id, |s| {
        s.mesh
            .clone()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "no finished deform job"))
    })?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], obj).into_response())
}

async fn get_report(State(state): State<Shared>, Path(id): Path<Uuid>) -> ApiResult<Json<Value>> {
    with_session(&state, id, |s| {
        s.report
            .clone()
            .map(Json)
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "no finished deform job"))
    })
}
