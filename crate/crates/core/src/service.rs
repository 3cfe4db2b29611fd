// SPDX-License-Identifier: Apache-2.0

//! JSON HTTP API over the library.
//!
//! | route              | body                                  |
//! |--------------------|---------------------------------------|
//! | `GET /api/nodes`   | registry JSON, with `ETag`            |
//! | `POST /api/generate` | `{instruction, tag}`                |
//! | `POST /api/compile`  | `{pseudocode}` (or `text/plain`)    |
//! | `POST /api/evaluate` | `{generated, target, cascade?}`     |
//! | `POST /api/layout`   | `{nodes: [...]}`                    |
//!
//! Every error response is `{"error": code, "detail": message}` plus
//! endpoint-specific fields (`stage`, `violations`).

use std::fs::OpenOptions;
use std::future::Future;
use std::io::Write as _;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::{Body, Bytes};
use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tokio::net::TcpListener;
use tokio::sync::Semaphore;
use tower_http::cors::CorsLayer;

use crate::graph::{self, compile, CompileReport, GraphJsonError, InterpretOptions, SerializedGraph};
use crate::layout::{optimize_layout, LayoutError};
use crate::llm::{GenerateError, Generator, PipelineTag};
use crate::metric::{interactions_with, MetricError, MetricOptions};
use crate::registry::Registry;

pub const MAX_COMPILE_BODY: usize = 100 * 1024;
const MAX_JSON_BODY: usize = 2 * 1024 * 1024;

#[derive(Clone)]
pub struct ServiceConfig {
    pub generator: Generator,
    /// Concurrent evaluations allowed.
    pub workers: usize,
    /// Directory for the `generations.jsonl` audit log.
    pub save_dir: Option<PathBuf>,
    pub cors_origin: Option<String>,
    pub evaluate_time_limit: Option<Duration>,
}

impl ServiceConfig {
    pub fn new(generator: Generator) -> ServiceConfig {
        ServiceConfig {
            generator,
            workers: std::thread::available_parallelism().map_or(2, |n| n.get()),
            save_dir: None,
            cors_origin: None,
            evaluate_time_limit: Some(Duration::from_secs(30)),
        }
    }
}

struct AppState {
    registry_json: String,
    etag: String,
    generator: Generator,
    eval_slots: Semaphore,
    evaluate_time_limit: Option<Duration>,
    audit: Option<Mutex<std::fs::File>>,
}

impl AppState {
    fn registry(&self) -> &Registry {
        self.generator.registry()
    }
}

#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    code: &'static str,
    detail: String,
    extra: Vec<(&'static str, Value)>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, detail: impl Into<String>) -> ApiError {
        ApiError {
            status,
            code,
            detail: detail.into(),
            extra: Vec::new(),
        }
    }

    fn bad_request(detail: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", detail)
    }

    fn with(mut self, key: &'static str, value: Value) -> ApiError {
        self.extra.push((key, value));
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = serde_json::Map::new();
        body.insert("error".into(), self.code.into());
        body.insert("detail".into(), self.detail.into());
        for (k, v) in self.extra {
            body.insert(k.into(), v);
        }
        (self.status, Json(Value::Object(body))).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

async fn read_body(headers: &HeaderMap, body: Body, limit: usize) -> Result<Bytes, ApiError> {
    let too_large = || {
        ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "payload_too_large",
            format!("request body exceeds {limit} bytes"),
        )
    };
    let declared = headers
        .get(header::CONTENT_LENGTH)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse::<usize>().ok());
    if declared.is_some_and(|n| n > limit) {
        return Err(too_large());
    }
    axum::body::to_bytes(body, limit).await.map_err(|_| too_large())
}

fn utf8(bytes: &Bytes) -> Result<&str, ApiError> {
    std::str::from_utf8(bytes).map_err(|e| ApiError::bad_request(format!("body is not valid UTF-8: {e}")))
}

fn parse_json<T: for<'de> Deserialize<'de>>(bytes: &Bytes) -> Result<T, ApiError> {
    let text = utf8(bytes)?;
    if text.trim().is_empty() {
        return Err(ApiError::bad_request("empty request body"));
    }
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ApiError::bad_request(format!("invalid JSON at `{path}`: {}", e.inner())).with("path", path.into())
    })
}

fn json_response<T: Serialize>(value: &T) -> Response {
    let mut response = Json(value).into_response();
    response
        .headers_mut()
        .insert(header::CACHE_CONTROL, HeaderValue::from_static("no-store"));
    response
}

async fn get_nodes(State(state): State<Arc<AppState>>, headers: HeaderMap) -> Response {
    let etag = HeaderValue::from_str(&state.etag).expect("etag is ascii");
    let matches = headers
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.split(',').any(|t| t.trim() == state.etag || t.trim() == "*"));
    if matches {
        return (StatusCode::NOT_MODIFIED, [(header::ETAG, etag)]).into_response();
    }
    (
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("application/json")),
            (header::ETAG, etag),
        ],
        state.registry_json.clone(),
    )
        .into_response()
}

#[derive(Deserialize)]
struct GenerateRequest {
    instruction: String,
    tag: String,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct GenerateResponse<'a> {
    selected_nodes: &'a [String],
    pseudocode: &'a str,
    dropped_lines: &'a [graph::DroppedLine],
    dangling_args: &'a [graph::DanglingArg],
    diagnostics: &'a [String],
    graph: &'a SerializedGraph,
}

fn generate_error(err: GenerateError) -> ApiError {
    let stage = err.stage().map(|s| Value::from(s.to_string()));
    let api = match &err {
        GenerateError::InvalidInstruction(_) => return ApiError::bad_request(err.to_string()),
        GenerateError::Timeout { .. } => ApiError::new(StatusCode::GATEWAY_TIMEOUT, "stage_timeout", err.to_string()),
        _ => ApiError::new(StatusCode::BAD_GATEWAY, "generation_failed", err.to_string()),
    };
    match stage {
        Some(stage) => api.with("stage", stage),
        None => api,
    }
}

async fn post_generate(State(state): State<Arc<AppState>>, headers: HeaderMap, body: Body) -> ApiResult {
    let bytes = read_body(&headers, body, MAX_JSON_BODY).await?;
    let request: GenerateRequest = parse_json(&bytes)?;
    let tag: PipelineTag = request.tag.parse().map_err(|e: crate::llm::UnknownTag| ApiError::bad_request(e.to_string()))?;
    let generator = state.generator.clone();
    let instruction = request.instruction;
    let result = tokio::task::spawn_blocking(move || generator.generate(&instruction, tag))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(generate_error)?;
    if let Some(audit) = &state.audit {
        let line = serde_json::to_string(&result).expect("result serializes");
        let mut file = audit.lock().expect("audit lock");
        if let Err(e) = writeln!(file, "{line}") {
            log::error!("audit log write failed: {e}");
        }
    }
    Ok(json_response(&GenerateResponse {
        selected_nodes: &result.selected_nodes,
        pseudocode: &result.pseudocode,
        dropped_lines: &result.report.dropped_lines,
        dangling_args: &result.report.dangling_args,
        diagnostics: &result.report.diagnostics,
        graph: &result.graph,
    }))
}

#[derive(Deserialize)]
struct CompileRequest {
    pseudocode: String,
}

#[derive(Deserialize)]
struct LayoutQuery {
    layout: Option<bool>,
}

async fn post_compile(
    State(state): State<Arc<AppState>>,
    Query(query): Query<LayoutQuery>,
    headers: HeaderMap,
    body: Body,
) -> ApiResult {
    let bytes = read_body(&headers, body, MAX_COMPILE_BODY).await?;
    if bytes.is_empty() {
        return Err(ApiError::bad_request("empty request body"));
    }
    let plain = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("text/plain"));
    let source = if plain {
        utf8(&bytes)?.to_string()
    } else {
        parse_json::<CompileRequest>(&bytes)?.pseudocode
    };
    let mut report: CompileReport = compile(&source, state.registry(), InterpretOptions::default());
    if query.layout.unwrap_or(true) {
        report.graph = optimize_layout(&report.graph).expect("interpreter output is acyclic");
    }
    Ok(json_response(&report))
}

fn graph_error(role: &str, err: GraphJsonError) -> ApiError {
    match err {
        GraphJsonError::Parse { path, message } => {
            ApiError::bad_request(format!("{role} graph: invalid JSON at `{path}`: {message}"))
                .with("path", format!("{role}.{path}").into())
        }
        GraphJsonError::Invalid { path, message } => ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_graph",
            format!("{role} graph is invalid"),
        )
        .with("role", role.into())
        .with("violations", json!([{"kind": "structure", "path": path, "message": message}])),
    }
}

#[derive(Deserialize)]
struct EvaluateRequest {
    generated: Value,
    target: Value,
    #[serde(default = "default_cascade")]
    cascade: bool,
}

fn default_cascade() -> bool {
    true
}

async fn post_evaluate(State(state): State<Arc<AppState>>, headers: HeaderMap, body: Body) -> ApiResult {
    let bytes = read_body(&headers, body, MAX_JSON_BODY).await?;
    let request: EvaluateRequest = parse_json(&bytes)?;
    let generated = graph::from_value(request.generated).map_err(|e| graph_error("generated", e))?;
    let target = graph::from_value(request.target).map_err(|e| graph_error("target", e))?;
    let options = MetricOptions {
        cascade: request.cascade,
        time_limit: state.evaluate_time_limit,
        ..MetricOptions::default()
    };
    let _permit = state
        .eval_slots
        .acquire()
        .await
        .map_err(|_| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "shutting_down", "server is shutting down"))?;
    let worker_state = Arc::clone(&state);
    let outcome = tokio::task::spawn_blocking(move || {
        interactions_with(&generated, &target, worker_state.registry(), options)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    match outcome {
        Ok(report) => Ok(json_response(&report)),
        Err(MetricError::BudgetExceeded(detail)) => {
            Err(ApiError::new(StatusCode::CONFLICT, "budget_exceeded", format!("budget exceeded: {detail}")))
        }
        Err(MetricError::InvalidGraph { role, violations }) => {
            let detail = format!("{role} graph is invalid: {} violation(s)", violations.len());
            let violations = serde_json::to_value(&violations).expect("violations serialize");
            Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_graph", detail)
                .with("role", role.to_string().into())
                .with("violations", violations))
        }
    }
}

async fn post_layout(headers: HeaderMap, body: Body) -> ApiResult {
    let bytes = read_body(&headers, body, MAX_JSON_BODY).await?;
    let value: Value = parse_json(&bytes)?;
    let graph = graph::from_value(value).map_err(|e| graph_error("input", e))?;
    match optimize_layout(&graph) {
        Ok(laid_out) => Ok(json_response(&laid_out)),
        Err(err @ LayoutError::Cycle { .. }) => {
            Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "cycle", err.to_string()))
        }
    }
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed on this endpoint")
}

fn registry_etag(reg: &Registry, json: &str) -> String {
    let digest = hex::encode(Sha256::digest(json.as_bytes()));
    format!("\"registry-v{}-{}\"", reg.version(), &digest[..16])
}

/// Builds the router. Fails if the audit log cannot be opened or the CORS
/// origin is not a valid header value.
pub fn router(config: ServiceConfig) -> std::io::Result<Router> {
    let registry_json = config.generator.registry().to_json();
    let etag = registry_etag(config.generator.registry(), &registry_json);
    let audit = match &config.save_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(dir.join("generations.jsonl"))?;
            Some(Mutex::new(file))
        }
        None => None,
    };
    let state = Arc::new(AppState {
        registry_json,
        etag,
        generator: config.generator,
        eval_slots: Semaphore::new(config.workers.max(1)),
        evaluate_time_limit: config.evaluate_time_limit,
        audit,
    });
    let mut app = Router::new()
        .route("/api/nodes", get(get_nodes))
        .route("/api/generate", post(post_generate))
        .route("/api/compile", post(post_compile))
        .route("/api/evaluate", post(post_evaluate))
        .route("/api/layout", post(post_layout))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(state);
    if let Some(origin) = &config.cors_origin {
        let origin = HeaderValue::from_str(origin)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, format!("bad CORS origin: {e}")))?;
        app = app.layer(
            CorsLayer::new()
                .allow_origin(origin)
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([header::CONTENT_TYPE, header::IF_NONE_MATCH])
                .expose_headers([header::ETAG]),
        );
    }
    Ok(app)
}

/// Serves until `shutdown` resolves, then drains in-flight requests.
pub async fn serve(
    listener: TcpListener,
    config: ServiceConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(config)?;
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// A server running on its own runtime thread. Dropping the handle stops it.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<std::io::Result<()>>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    pub fn shutdown(mut self) -> std::io::Result<()> {
        self.stop_and_join()
    }

    fn stop_and_join(&mut self) -> std::io::Result<()> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().unwrap_or_else(|_| Err(std::io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.stop_and_join();
    }
}

/// Binds `addr` (port 0 picks a free port) and serves on a background thread.
pub fn spawn_background(addr: &str, config: ServiceConfig) -> std::io::Result<ServerHandle> {
    let std_listener = std::net::TcpListener::bind(addr)?;
    std_listener.set_nonblocking(true)?;
    let local = std_listener.local_addr()?;
    let app = router(config)?;
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let thread = std::thread::Builder::new().name("pipeforge-http".into()).spawn(move || {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()?;
        runtime.block_on(async move {
            let listener = TcpListener::from_std(std_listener)?;
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = stopped.await;
                })
                .await
        })
    })?;
    Ok(ServerHandle {
        addr: local,
        stop: Some(stop),
        thread: Some(thread),
    })
}
