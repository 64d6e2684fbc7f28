//! HTTP backend of the workbench: sessions with a palette, NL or keyword
//! queries, pipeline edits, and a fresh run after every mutation.

mod error;
mod session;

use std::collections::HashMap;
use std::io::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post, put};
use axum::{Json, Router};
use lowcode_core::dsl::{
    blocks_to_pipeline, pipeline_to_blocks, Arg, ArgKey, ArgValue, BlockGraph, Invocation,
};
use lowcode_core::engine::{builtin_dataset, run_pipeline, PREVIEW_ROWS};
use lowcode_core::resolver::{keyword_mode, predict, Candidate, Prediction, ResolverIndex};
use lowcode_core::{Dataset, Diagnostic, DiagnosticCode, OperatorKind, Registry, RunResult};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::{Mutex, RwLock};

pub use error::ApiError;
pub use session::{Mode, Session, Snapshot};

/// Candidates requested from the resolver per NL query.
pub const QUERY_CANDIDATES: usize = 5;
pub const DEFAULT_RUN_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub run_timeout: Duration,
    /// Directory holding `<name>.train.csv`, `<name>.test.csv` and
    /// `<name>.meta.json` datasets, searched after the built-in ones.
    pub dataset_dir: Option<PathBuf>,
    /// Per-session JSON snapshots, reloaded on start.
    pub snapshot_dir: Option<PathBuf>,
    /// Local JSON-lines log of NL queries; off when `None`.
    pub query_log: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            run_timeout: DEFAULT_RUN_TIMEOUT,
            dataset_dir: None,
            snapshot_dir: None,
            query_log: None,
        }
    }
}

type SessionRef = Arc<Mutex<Session>>;

pub struct AppState {
    registry: Arc<Registry>,
    index: Arc<ResolverIndex>,
    config: ServerConfig,
    sessions: RwLock<HashMap<String, SessionRef>>,
    next_id: AtomicU64,
    datasets: Mutex<HashMap<String, Arc<Dataset>>>,
}

impl AppState {
    /// Shared state, with sessions restored from the snapshot directory.
    pub fn new(registry: Registry, index: ResolverIndex, config: ServerConfig) -> Arc<AppState> {
        let state = AppState {
            registry: Arc::new(registry),
            index: Arc::new(index),
            config,
            sessions: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
            datasets: Mutex::new(HashMap::new()),
        };
        if let Some(dir) = state.config.snapshot_dir.clone() {
            let mut restored = HashMap::new();
            for snap in session::read_snapshots(&dir) {
                match state.restore(&snap) {
                    Ok(s) => {
                        if let Some(n) = snap
                            .id
                            .strip_prefix('s')
                            .and_then(|n| n.parse::<u64>().ok())
                        {
                            state.next_id.fetch_max(n + 1, Ordering::SeqCst);
                        }
                        restored.insert(snap.id.clone(), Arc::new(Mutex::new(s)));
                    }
                    Err(e) => log::warn!("cannot restore session {}: {}", snap.id, e.message),
                }
            }
            state
                .sessions
                .try_write()
                .expect("state is not shared yet")
                .extend(restored);
        }
        Arc::new(state)
    }

    fn load_dataset_now(&self, name: &str) -> Result<Dataset, ApiError> {
        let unknown = || {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "unknown_dataset",
                format!("no dataset '{name}'"),
            )
        };
        let failed = |e: lowcode_core::engine::TableError| {
            ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "dataset_error",
                e.to_string(),
            )
        };
        if let Some(ds) = builtin_dataset::<f64>(name) {
            return ds.map_err(failed);
        }
        let valid_name = !name.is_empty()
            && name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_".contains(c));
        match &self.config.dataset_dir {
            Some(dir) if valid_name && dir.join(format!("{name}.meta.json")).exists() => {
                Dataset::load(dir, name).map_err(failed)
            }
            _ => Err(unknown()),
        }
    }

    fn restore(&self, snap: &Snapshot) -> Result<Session, ApiError> {
        let dataset = Arc::new(self.load_dataset_now(&snap.dataset)?);
        let graph =
            BlockGraph::from_wire(&snap.graph).map_err(|e| ApiError::malformed(e.to_string()))?;
        Ok(Session {
            id: snap.id.clone(),
            dataset,
            graph,
            palette_filter: snap.palette_filter.clone(),
            mode: snap.mode,
            seed: snap.seed,
        })
    }

    async fn dataset(&self, name: &str) -> Result<Arc<Dataset>, ApiError> {
        let mut cache = self.datasets.lock().await;
        if let Some(d) = cache.get(name) {
            return Ok(d.clone());
        }
        let d = Arc::new(self.load_dataset_now(name)?);
        cache.insert(name.to_string(), d.clone());
        Ok(d)
    }

    async fn session(&self, id: &str) -> Result<SessionRef, ApiError> {
        self.sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }

    fn persist(&self, s: &Session) {
        if let Some(dir) = &self.config.snapshot_dir {
            if let Err(e) = session::write_snapshot(dir, &s.snapshot()) {
                log::warn!("cannot write snapshot for {}: {e}", s.id);
            }
        }
    }

    fn log_query(&self, s: &Session, text: &str) {
        let Some(path) = &self.config.query_log else {
            return;
        };
        let line = json!({"session": s.id, "mode": s.mode, "text": text}).to_string();
        let written = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .and_then(|mut f| writeln!(f, "{line}"));
        if let Err(e) = written {
            log::warn!("cannot append to query log {}: {e}", path.display());
        }
    }

    /// Runs the session's active pipeline on a blocking thread, bounded by
    /// the run timeout.
    async fn run(&self, s: &Session) -> RunResult {
        let before = s.dataset.train.preview(PREVIEW_ROWS);
        let ast = match blocks_to_pipeline(&s.graph) {
            Ok(ast) => ast,
            Err(e) => {
                return RunResult {
                    before,
                    after: None,
                    score: None,
                    diagnostics: vec![Diagnostic::error(
                        DiagnosticCode::InvalidArgument,
                        e.to_string(),
                    )],
                }
            }
        };
        let (dataset, registry, seed) = (s.dataset.clone(), self.registry.clone(), s.seed);
        let job =
            tokio::task::spawn_blocking(move || run_pipeline(&dataset, &ast, &registry, seed));
        let timeout = self.config.run_timeout;
        match tokio::time::timeout(timeout, job).await {
            Ok(Ok(result)) => result,
            Ok(Err(e)) => RunResult {
                before,
                after: None,
                score: None,
                diagnostics: vec![Diagnostic::error(
                    DiagnosticCode::InvalidArgument,
                    format!("run failed: {e}"),
                )],
            },
            Err(_) => RunResult {
                before,
                after: None,
                score: None,
                diagnostics: vec![Diagnostic::error(
                    DiagnosticCode::Timeout,
                    format!("pipeline run exceeded {} s", timeout.as_secs_f64()),
                )],
            },
        }
    }

    fn palette(&self, filter: Option<&[String]>) -> Palette {
        let entry = |name: &str| {
            self.registry.lookup(name).map(|op| PaletteEntry {
                name: op.name.clone(),
                kind: op.kind,
                color: op.kind.color(),
                executable: op.executable,
            })
        };
        let operators = match filter {
            Some(names) => names.iter().filter_map(|n| entry(n)).collect(),
            None => self
                .registry
                .iter()
                .filter_map(|op| entry(&op.name))
                .collect(),
        };
        Palette {
            filtered: filter.is_some(),
            operators,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaletteEntry {
    pub name: String,
    pub kind: OperatorKind,
    pub color: lowcode_core::registry::ColorRole,
    pub executable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    pub filtered: bool,
    pub operators: Vec<PaletteEntry>,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/palette", get(get_palette))
        .route("/sessions/{id}/palette/reset", post(reset_palette))
        .route("/sessions/{id}/query", post(post_query))
        .route("/sessions/{id}/pipeline", put(put_pipeline))
        .route("/operators/{name}", get(get_operator))
        .fallback(|| async {
            ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
        })
        .with_state(state)
}

/// Serves the API on `listener` until the process ends.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

#[derive(Deserialize)]
struct CreateRequest {
    dataset: String,
    mode: Mode,
    #[serde(default)]
    seed: u64,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let Json(req) = body?;
    let dataset = state.dataset(&req.dataset).await?;
    let id = format!("s{}", state.next_id.fetch_add(1, Ordering::SeqCst));
    let session = Session {
        id: id.clone(),
        dataset,
        graph: BlockGraph::default(),
        palette_filter: None,
        mode: req.mode,
        seed: req.seed,
    };
    let body = json!({
        "id": id,
        "dataset": req.dataset,
        "mode": req.mode,
        "seed": req.seed,
        "before": session.dataset.train.preview(PREVIEW_ROWS),
        "graph": session.graph.to_wire(),
        "palette": state.palette(None),
    });
    state.persist(&session);
    state
        .sessions
        .write()
        .await
        .insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(body)))
}

async fn get_palette(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Palette>, ApiError> {
    let s = state.session(&id).await?;
    let s = s.lock().await;
    Ok(Json(state.palette(s.palette_filter.as_deref())))
}

async fn reset_palette(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Palette>, ApiError> {
    let s = state.session(&id).await?;
    let mut s = s.lock().await;
    if s.palette_filter.take().is_some() {
        state.persist(&s);
    }
    Ok(Json(state.palette(None)))
}

#[derive(Deserialize)]
struct QueryRequest {
    text: String,
}

/// The block added by an NL query.
#[derive(Debug, Clone, Serialize)]
struct Appended {
    block_id: String,
    step: usize,
    text: String,
    highlighted: Vec<String>,
}

/// Replaces MASK slots with schema defaults and drops arguments the
/// pipeline grammar cannot hold (positional or unknown names).
fn runnable(candidate: &Candidate, registry: &Registry) -> Option<Invocation> {
    let spec = registry.lookup(&candidate.invocation.operator)?;
    if spec.kind == OperatorKind::Utility {
        return None;
    }
    let args = candidate
        .invocation
        .args
        .iter()
        .filter_map(|a| {
            let ArgKey::Named(name) = &a.key else {
                return None;
            };
            let hp = spec.hyperparam(name)?;
            let value = match &a.value {
                ArgValue::Mask => hp.default.clone(),
                ArgValue::Ref(_) => return None,
                v => v.clone(),
            };
            Some(Arg::named(name.clone(), value))
        })
        .collect();
    Some(Invocation {
        operator: spec.name.clone(),
        args,
    })
}

async fn post_query(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<QueryRequest>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let Json(req) = body?;
    let s = state.session(&id).await?;
    let mut s = s.lock().await;
    let text = req.text.trim();
    if s.mode == Mode::Nl && !text.is_empty() {
        state.log_query(&s, text);
    }
    match s.mode {
        Mode::Keyword => {
            let operators = if text.is_empty() {
                Vec::new()
            } else {
                let ops = keyword_mode(&state.registry, text);
                s.palette_filter = Some(ops.clone());
                state.persist(&s);
                ops
            };
            Ok(Json(json!({
                "mode": s.mode,
                "operators": operators,
                "palette": state.palette(s.palette_filter.as_deref()),
                "graph": s.graph.to_wire(),
                "run": Value::Null,
            })))
        }
        Mode::Nl => {
            let prediction = if text.is_empty() {
                Prediction::default()
            } else {
                predict(&state.index, text, QUERY_CANDIDATES)
            };
            if prediction.candidates.is_empty() {
                return Ok(Json(json!({
                    "mode": s.mode,
                    "prediction": prediction,
                    "appended": Value::Null,
                    "palette": state.palette(s.palette_filter.as_deref()),
                    "graph": s.graph.to_wire(),
                    "run": Value::Null,
                })));
            }
            let filter: Vec<String> = prediction
                .relevant_operators
                .iter()
                .filter(|o| state.registry.contains(o))
                .cloned()
                .collect();
            s.palette_filter = Some(filter);
            let pick = prediction
                .candidates
                .iter()
                .find_map(|c| runnable(c, &state.registry).map(|inv| (c, inv)));
            let mut appended = None;
            let mut run = Value::Null;
            if let Some((cand, inv)) = pick {
                let mut ast =
                    blocks_to_pipeline(&s.graph).map_err(|e| ApiError::malformed(e.to_string()))?;
                ast.steps.push(inv.clone());
                s.graph = pipeline_to_blocks(&ast, &s.graph);
                let step = ast.steps.len() - 1;
                appended = Some(Appended {
                    block_id: s.graph.chain[step].clone(),
                    step,
                    text: inv.to_string(),
                    highlighted: cand
                        .invocation
                        .args
                        .iter()
                        .filter(|a| a.value.is_mask() && inv.get(&a.key.to_string()).is_some())
                        .map(|a| a.key.to_string())
                        .collect(),
                });
                run = serde_json::to_value(state.run(&s).await).expect("run result serializes");
            }
            state.persist(&s);
            Ok(Json(json!({
                "mode": s.mode,
                "prediction": prediction,
                "appended": appended,
                "palette": state.palette(s.palette_filter.as_deref()),
                "graph": s.graph.to_wire(),
                "run": run,
            })))
        }
    }
}

async fn put_pipeline(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<Value>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let Json(wire) = body?;
    let graph =
        BlockGraph::from_wire(&wire).map_err(|e| ApiError::malformed(e.to_string()).at("body"))?;
    let s = state.session(&id).await?;
    let mut s = s.lock().await;
    s.graph = graph;
    let pipeline = blocks_to_pipeline(&s.graph)
        .expect("checked graph projects")
        .to_string();
    let run = state.run(&s).await;
    state.persist(&s);
    Ok(Json(json!({
        "graph": s.graph.to_wire(),
        "pipeline": pipeline,
        "diagnostics": run.diagnostics,
        "run": run,
    })))
}

async fn get_operator(
    State(state): State<Arc<AppState>>,
    Path(name): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let op = state.registry.lookup(&name).ok_or_else(|| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_operator",
            format!("no operator '{name}'"),
        )
    })?;
    let mut v = serde_json::to_value(op).expect("spec serializes");
    v["color"] = json!(op.kind.color());
    Ok(Json(v))
}
