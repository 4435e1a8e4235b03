//! Playground API. Each session owns a solved co-assembly instance and a
//! run in which the client plays the human.
//!
//! A session keeps only its seed and the client's choices. Every request
//! rebuilds the run by replaying those choices, so the simulator stays the
//! single source of truth for slips and legality.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use tremble_core::abstraction::mdpst_from_nondet;
use tremble_core::coassembly::{build_coassembly, BenchConfig, Coassembly};
use tremble_core::dfa::{compile, Dfa};
use tremble_core::domain::{ActionId, StateId};
use tremble_core::product::{synthesize, Lookup, ProductState, Strategy, ViOptions};
use tremble_core::sim::{Runner, SimError, Stop};

/// Step limit for playground runs.
pub const MAX_STEPS: usize = 200;

/// A solved instance shared by a session's requests.
pub struct Instance {
    pub bench: Coassembly,
    pub dfa: Dfa,
    pub strategy: Strategy,
    pub value: f64,
}

impl Instance {
    pub fn solve(cfg: &BenchConfig) -> Result<Self, String> {
        let bench = build_coassembly(cfg).map_err(|e| e.to_string())?;
        let m = mdpst_from_nondet(&bench.domain, &bench.errors).map_err(|e| e.to_string())?;
        let dfa = compile(&bench.formula, bench.domain.props());
        let syn = synthesize(&m, &dfa, ViOptions { epsilon: cfg.epsilon, ..ViOptions::default() });
        Ok(Instance { bench, dfa, strategy: syn.strategy, value: syn.value })
    }

    fn action(&self, a: ActionId) -> Value {
        json!({ "id": a, "name": self.bench.domain.action(a).display_name() })
    }

    fn view(&self, st: ProductState) -> Value {
        let cs = &self.bench.states[st.s as usize];
        json!({
            "s": st.s,
            "placement": {
                "grid": cs.placement.to_matrix(),
                "positions": cs.placement.positions(),
                "text": cs.placement.to_string(),
            },
            "counter": cs.c,
            "q": self.dfa.state_name(st.q).as_ref(),
            "in_goal": self.dfa.is_accepting(st.q),
        })
    }
}

struct Session {
    inst: Arc<Instance>,
    seed: u64,
    choices: Vec<StateId>,
    /// A step has been sampled and awaits `resolve`.
    pending: bool,
    /// Set once the run can make no further step.
    stop: Option<Stop>,
}

impl Session {
    /// The run so far, rebuilt from the recorded choices.
    fn runner(&self) -> Result<Runner<'_>, ApiError> {
        let i = &self.inst;
        let mut r = Runner::new(&i.bench.domain, &i.bench.errors, &i.strategy, &i.dfa, self.seed, MAX_STEPS);
        for &c in &self.choices {
            r.begin_step().map_err(ApiError::internal)?;
            r.resolve(c).map_err(ApiError::internal)?;
        }
        if self.pending {
            r.begin_step().map_err(ApiError::internal)?;
        }
        Ok(r)
    }

    fn stop_of(&self, r: &Runner) -> Option<Stop> {
        self.stop.or(r.stop())
    }

    fn snapshot(&self, id: &str) -> Result<Value, ApiError> {
        let r = self.runner()?;
        let cur = r.current();
        let intended = match self.inst.strategy.lookup(&self.inst.dfa, cur) {
            Lookup::Act { action, .. } if !self.inst.dfa.is_accepting(cur.q) => self.inst.action(action),
            _ => Value::Null,
        };
        Ok(json!({
            "id": id,
            "seed": self.seed,
            "value": self.inst.value,
            "state": self.inst.view(cur),
            "value_here": self.inst.strategy.value_of(&self.inst.dfa, cur),
            "intended_action": intended,
            "steps": r.path().len(),
            "awaiting_choice": self.pending,
            "stop": self.stop_of(&r),
        }))
    }
}

#[derive(Default)]
pub struct AppState {
    sessions: Mutex<HashMap<String, Arc<tokio::sync::Mutex<Session>>>>,
    created: AtomicU64,
}

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl ApiError {
    fn bad_request(m: impl ToString) -> Self {
        ApiError(StatusCode::BAD_REQUEST, m.to_string())
    }

    fn conflict(m: impl ToString) -> Self {
        ApiError(StatusCode::CONFLICT, m.to_string())
    }

    fn internal(e: impl ToString) -> Self {
        ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NewSession {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: u32,
    pub p: f64,
    #[serde(default)]
    pub goal: Option<Vec<u8>>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Resolve {
    choice_index: usize,
}

fn body<T: serde::de::DeserializeOwned>(b: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(b).map_err(|e| ApiError::bad_request(format!("malformed request: {e}")))
}

pub fn router() -> Router {
    router_with(Arc::new(AppState::default()))
}

pub fn router_with(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/session", post(create))
        .route("/api/session/{id}", get(show))
        .route("/api/session/{id}/step", post(step))
        .route("/api/session/{id}/resolve", post(resolve))
        .route("/api/session/{id}/hint", get(hint))
        .route("/api/session/{id}/log", get(log))
        .with_state(state)
}

pub fn run_server(port: u16) -> std::io::Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
        eprintln!("listening on {}", listener.local_addr()?);
        axum::serve(listener, router()).await
    })
}

/// Session ids are a bijective scramble of a counter.
fn session_id(n: u64) -> String {
    let mut z = n.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    format!("{:016x}", z ^ (z >> 31))
}

fn session(state: &AppState, id: &str) -> Result<Arc<tokio::sync::Mutex<Session>>, ApiError> {
    state
        .sessions
        .lock()
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown session {id}")))
}

async fn create(State(state): State<Arc<AppState>>, b: Bytes) -> ApiResult {
    let req: NewSession = body(&b)?;
    let cfg = BenchConfig { goal: req.goal, ..BenchConfig::new(req.n, req.k, req.p) };
    cfg.validate().map_err(ApiError::bad_request)?;
    let inst = tokio::task::spawn_blocking(move || Instance::solve(&cfg))
        .await
        .map_err(ApiError::internal)?
        .map_err(ApiError::bad_request)?;
    let n = state.created.fetch_add(1, Ordering::Relaxed);
    let id = session_id(n);
    let sess = Session { inst: Arc::new(inst), seed: req.seed.unwrap_or(n), choices: Vec::new(), pending: false, stop: None };
    let snap = sess.snapshot(&id)?;
    state.sessions.lock().insert(id, Arc::new(tokio::sync::Mutex::new(sess)));
    Ok(Json(snap))
}

async fn show(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let s = session(&state, &id)?;
    let sess = s.lock().await;
    Ok(Json(sess.snapshot(&id)?))
}

async fn step(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let s = session(&state, &id)?;
    let mut sess = s.lock().await;
    if sess.pending {
        return Err(ApiError::conflict("a step is already awaiting resolve"));
    }
    let mut r = sess.runner()?;
    if let Some(stop) = sess.stop_of(&r) {
        return Err(ApiError::conflict(format!("run finished: {}", stop_name(stop))));
    }
    let prompt = match r.begin_step() {
        Ok(Some(p)) => p.clone(),
        Ok(None) => {
            let stop = r.stop().unwrap_or(Stop::Truncated);
            drop(r);
            sess.stop = Some(stop);
            return Err(ApiError::conflict(format!("run finished: {}", stop_name(stop))));
        }
        Err(e) => return Err(ApiError::internal(e)),
    };
    let cur = r.current();
    drop(r);
    sess.pending = true;
    let inst = &sess.inst;
    let theta: Vec<Value> = prompt
        .theta
        .iter()
        .zip(&prompt.values)
        .enumerate()
        .map(|(i, (&t, v))| {
            let next = ProductState { s: t, q: inst.dfa.step(cur.q, inst.bench.domain.label(t)) };
            json!({ "index": i, "state": inst.view(next), "value": v })
        })
        .collect();
    Ok(Json(json!({
        "step": prompt.step,
        "intended": inst.action(prompt.intended),
        "instructed": inst.action(prompt.instructed),
        "slipped": prompt.intended != prompt.instructed,
        "theta": theta,
    })))
}

async fn resolve(State(state): State<Arc<AppState>>, Path(id): Path<String>, b: Bytes) -> ApiResult {
    let req: Resolve = body(&b)?;
    let s = session(&state, &id)?;
    let mut sess = s.lock().await;
    if !sess.pending {
        return Err(ApiError::conflict("no step awaits resolve; POST step first"));
    }
    let mut r = sess.runner()?;
    let prompt = r.pending().expect("pending step was replayed");
    let Some(&chosen) = prompt.theta.get(req.choice_index) else {
        return Err(ApiError::conflict(format!(
            "choice_index {} is outside the {} successors",
            req.choice_index,
            prompt.theta.len()
        )));
    };
    r.resolve(chosen).map_err(|e| match e {
        SimError::IllegalChoice { .. } => ApiError::conflict(e),
        e => ApiError::internal(e),
    })?;
    let cur = r.current();
    let stop = r.stop();
    drop(r);
    sess.choices.push(chosen);
    sess.pending = false;
    sess.stop = stop;
    Ok(Json(json!({
        "state": sess.inst.view(cur),
        "value_here": sess.inst.strategy.value_of(&sess.inst.dfa, cur),
        "success": stop == Some(Stop::Goal),
        "stop": stop,
    })))
}

async fn hint(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let s = session(&state, &id)?;
    let sess = s.lock().await;
    if !sess.pending {
        return Err(ApiError::conflict("no step awaits resolve; POST step first"));
    }
    let r = sess.runner()?;
    let p = r.pending().expect("pending step was replayed");
    let pick = p.greedy();
    let idx = p.theta.iter().position(|&t| t == pick).expect("greedy picks from theta");
    Ok(Json(json!({ "choice_index": idx, "value_after": p.values[idx] })))
}

async fn log(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let s = session(&state, &id)?;
    let sess = s.lock().await;
    let r = sess.runner()?;
    let mut out = String::new();
    for rec in r.path() {
        out.push_str(&serde_json::to_string(rec).map_err(ApiError::internal)?);
        out.push('\n');
    }
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], out).into_response())
}

fn stop_name(s: Stop) -> &'static str {
    match s {
        Stop::Goal => "goal",
        Stop::LeftRelevant => "left_relevant",
        Stop::Truncated => "truncated",
    }
}
