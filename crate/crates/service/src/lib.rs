//! HTTP/JSON backend for browser annotation of an xraysegkit dataset.
//!
//! Label files stay the single source of truth: every accepted save is
//! written atomically (temporary file, fsync, rename) and reads parse the
//! file back. Saves carry the revision they were based on and are refused
//! with 409 when another save got there first.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::RwLock;
use tower_http::services::ServeDir;
use xraysegkit_core::geometry::Point;
use xraysegkit_core::imaging::{encode_png, load_image, read_dimensions};
use xraysegkit_core::labels::{
    list_images, parse_label_file, read_descriptor, serialize_label_file, DatasetDescriptor, PolygonAnnotation,
};
use xraysegkit_core::pipeline::{run_segment, SegmentRequest};
use xraysegkit_core::Error as CoreError;

const INDEX_HTML: &str = include_str!("../assets/index.html");

/// Called after the temporary label file is written and synced, right
/// before it is renamed into place. An error aborts the save.
pub type FaultHook = Arc<dyn Fn(&Path) -> io::Result<()> + Send + Sync>;

#[derive(Debug, Clone)]
struct ImageEntry {
    path: PathBuf,
    width: usize,
    height: usize,
}

struct Inner {
    descriptor: DatasetDescriptor,
    images: BTreeMap<String, ImageEntry>,
    /// Revision per stem; the write lock serializes saves to one image.
    revisions: HashMap<String, RwLock<u64>>,
    fault_hook: Option<FaultHook>,
    ui_dir: Option<PathBuf>,
}

/// Shared state of one running service.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    /// Reads the descriptor and the image headers. Label files are read on
    /// demand, so a malformed one only affects requests that touch it.
    pub fn open(descriptor_path: impl AsRef<Path>) -> Result<Self, CoreError> {
        let descriptor = read_descriptor(descriptor_path)?;
        let mut images = BTreeMap::new();
        for (stem, path) in list_images(&descriptor.images_dir)? {
            let (width, height) = read_dimensions(&path)?;
            images.insert(stem, ImageEntry { path, width, height });
        }
        let revisions = images.keys().map(|s| (s.clone(), RwLock::new(0))).collect();
        Ok(Self {
            inner: Arc::new(Inner {
                descriptor,
                images,
                revisions,
                fault_hook: None,
                ui_dir: None,
            }),
        })
    }

    /// Serve the annotator bundle from `dir` instead of the built-in page.
    pub fn with_ui_dir(self, dir: impl Into<PathBuf>) -> Self {
        self.map_inner(|i| i.ui_dir = Some(dir.into()))
    }

    pub fn with_fault_hook(self, hook: FaultHook) -> Self {
        self.map_inner(|i| i.fault_hook = Some(hook))
    }

    fn map_inner(self, f: impl FnOnce(&mut Inner)) -> Self {
        let mut inner = Arc::try_unwrap(self.inner).unwrap_or_else(|_| panic!("configure AppState before sharing it"));
        f(&mut inner);
        Self { inner: Arc::new(inner) }
    }

    pub fn descriptor(&self) -> &DatasetDescriptor {
        &self.inner.descriptor
    }

    pub fn image_count(&self) -> usize {
        self.inner.images.len()
    }
}

/// The full route table.
pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/classes", get(classes))
        .route("/api/images", get(list))
        .route("/api/images/{stem}", get(image_png))
        .route("/api/annotations/{stem}", get(get_annotations).put(put_annotations))
        .route("/api/preview/{stem}", get(preview));
    let app = match &state.inner.ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(INDEX_HTML) })),
    };
    app.with_state(state)
}

/// Serves until `shutdown` resolves. In-flight requests, including label
/// writes, run to completion before this returns.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

// ---------------------------------------------------------------- errors

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    details: Option<Vec<String>>,
}

#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: error.into(),
                details: None,
            },
        }
    }

    fn with_details(mut self, details: Vec<String>) -> Self {
        self.body.details = Some(details);
        self
    }

    fn not_found(stem: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown image '{stem}'"))
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        log::error!("{e}");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)
}

// ---------------------------------------------------------------- handlers

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn classes(State(state): State<AppState>) -> Json<Vec<String>> {
    Json(state.inner.descriptor.class_names.clone())
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ImageSummary {
    pub stem: String,
    pub width: usize,
    pub height: usize,
    pub instance_count: usize,
    pub revision: u64,
}

fn read_labels(desc: &DatasetDescriptor, stem: &str) -> Result<Vec<PolygonAnnotation>, String> {
    let path = desc.label_path(stem);
    match fs::read_to_string(&path) {
        Ok(text) => parse_label_file(&text, desc.num_classes()).map_err(|e| format!("{}: {e}", path.display())),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(format!("{}: {e}", path.display())),
    }
}

async fn list(State(state): State<AppState>) -> ApiResult<Json<Vec<ImageSummary>>> {
    let inner = &state.inner;
    let mut revisions = Vec::with_capacity(inner.images.len());
    for stem in inner.images.keys() {
        revisions.push(*inner.revisions[stem].read().await);
    }
    let st = state.clone();
    let counts = blocking(move || -> Result<Vec<usize>, Vec<String>> {
        let desc = &st.inner.descriptor;
        let mut problems = Vec::new();
        for dir in [&desc.images_dir, &desc.labels_dir] {
            if !dir.is_dir() {
                problems.push(format!("missing directory {}", dir.display()));
            }
        }
        if !problems.is_empty() {
            return Err(problems);
        }
        let mut counts = Vec::new();
        for stem in st.inner.images.keys() {
            match read_labels(desc, stem) {
                Ok(a) => counts.push(a.len()),
                Err(p) => problems.push(p),
            }
        }
        if problems.is_empty() {
            Ok(counts)
        } else {
            Err(problems)
        }
    })
    .await?
    .map_err(|problems| {
        log::error!("dataset unreadable: {}", problems.join("; "));
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "dataset is unreadable").with_details(problems)
    })?;
    let out = inner
        .images
        .iter()
        .zip(counts)
        .zip(revisions)
        .map(|(((stem, e), instance_count), revision)| ImageSummary {
            stem: stem.clone(),
            width: e.width,
            height: e.height,
            instance_count,
            revision,
        })
        .collect();
    Ok(Json(out))
}

fn entry<'a>(state: &'a AppState, stem: &str) -> ApiResult<&'a ImageEntry> {
    state.inner.images.get(stem).ok_or_else(|| ApiError::not_found(stem))
}

async fn image_png(State(state): State<AppState>, UrlPath(stem): UrlPath<String>) -> ApiResult<Response> {
    let path = entry(&state, &stem)?.path.clone();
    let bytes = blocking(move || load_image(&path).and_then(|img| encode_png(&img)))
        .await?
        .map_err(ApiError::internal)?;
    Ok(([(header::CONTENT_TYPE, "image/png")], bytes).into_response())
}

/// Wire form of one annotation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AnnotationDto {
    pub class_id: usize,
    pub vertices: Vec<Point>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct AnnotationsResponse {
    pub revision: u64,
    pub annotations: Vec<AnnotationDto>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SaveRequest {
    pub base_revision: u64,
    pub annotations: Vec<AnnotationDto>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct SaveResponse {
    pub revision: u64,
}

async fn get_annotations(
    State(state): State<AppState>,
    UrlPath(stem): UrlPath<String>,
) -> ApiResult<Json<AnnotationsResponse>> {
    entry(&state, &stem)?;
    let guard = state.inner.revisions[&stem].read().await;
    let revision = *guard;
    let st = state.clone();
    let anns = blocking(move || read_labels(&st.inner.descriptor, &stem))
        .await?
        .map_err(ApiError::internal)?;
    drop(guard);
    Ok(Json(AnnotationsResponse {
        revision,
        annotations: anns
            .into_iter()
            .map(|a| AnnotationDto {
                class_id: a.class_id,
                vertices: a.vertices,
            })
            .collect(),
    }))
}

fn validate(dtos: Vec<AnnotationDto>, num_classes: usize) -> Result<Vec<PolygonAnnotation>, Vec<String>> {
    let mut ok = Vec::new();
    let mut problems = Vec::new();
    for (i, d) in dtos.into_iter().enumerate() {
        let checked = PolygonAnnotation::new(d.class_id, d.vertices).and_then(|a| {
            a.validate_class(num_classes)?;
            Ok(a)
        });
        match checked {
            Ok(a) => ok.push(a),
            Err(kind) => problems.push(format!("annotation {i}: {kind}")),
        }
    }
    if problems.is_empty() {
        Ok(ok)
    } else {
        Err(problems)
    }
}

/// Temp file, fsync, optional fault hook, rename, then fsync of the
/// directory. The temp file is removed on any failure.
fn write_atomic(target: &Path, contents: &str, hook: Option<&FaultHook>) -> io::Result<()> {
    let dir = target.parent().unwrap_or(Path::new("."));
    let name = target.file_name().and_then(|n| n.to_str()).unwrap_or("labels");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        drop(f);
        if let Some(h) = hook {
            h(&tmp)?;
        }
        fs::rename(&tmp, target)?;
        if let Ok(d) = fs::File::open(dir) {
            let _ = d.sync_all();
        }
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

async fn put_annotations(
    State(state): State<AppState>,
    UrlPath(stem): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Json<SaveResponse>> {
    entry(&state, &stem)?;
    let req: SaveRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("malformed request body: {e}")))?;
    let anns = validate(req.annotations, state.inner.descriptor.num_classes())
        .map_err(|p| ApiError::new(StatusCode::BAD_REQUEST, "invalid annotations").with_details(p))?;

    let mut revision = state.inner.revisions[&stem].write().await;
    if req.base_revision != *revision {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            format!("stale revision {} (current {})", req.base_revision, *revision),
        ));
    }
    let st = state.clone();
    let target = state.inner.descriptor.label_path(&stem);
    let text = serialize_label_file(&anns);
    blocking(move || write_atomic(&target, &text, st.inner.fault_hook.as_ref()))
        .await?
        .map_err(|e| ApiError::internal(format!("saving labels for '{stem}' failed: {e}")))?;
    *revision += 1;
    log::info!("saved {} annotation(s) for {stem}, revision {}", anns.len(), *revision);
    Ok(Json(SaveResponse { revision: *revision }))
}

async fn preview(
    State(state): State<AppState>,
    UrlPath(stem): UrlPath<String>,
    Query(params): Query<BTreeMap<String, String>>,
) -> ApiResult<Response> {
    let path = entry(&state, &stem)?.path.clone();
    if !params.contains_key("method") {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "missing 'method' parameter"));
    }
    let request = SegmentRequest::from_params(&params).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    let bytes = blocking(move || -> ApiResult<Vec<u8>> {
        let img = load_image(&path).map_err(ApiError::internal)?;
        let out = run_segment(&img, &request).map_err(|e| match e {
            CoreError::Io { .. } | CoreError::UnsupportedImage(_) => ApiError::internal(e),
            other => ApiError::new(StatusCode::BAD_REQUEST, other.to_string()),
        })?;
        encode_png(&out.image).map_err(ApiError::internal)
    })
    .await??;
    Ok(([(header::CONTENT_TYPE, "image/png")], bytes).into_response())
}
