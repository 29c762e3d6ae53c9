//! Local session API over the reward-learning pipeline.
//!
//! One session holds an environment, a mutable list of demonstrations and
//! every posterior trained so far. Training runs on a snapshot of the
//! demonstrations in a blocking worker and is polled by token. The
//! `/teleop` WebSocket steps a robot marker one action per message and
//! records the visited states into a pending demonstration.
//!
//! | method | path | purpose |
//! |--------|------|---------|
//! | GET | `/env` | environment JSON |
//! | GET | `/demos` | stored demonstrations with ids |
//! | POST | `/demos` | append a trajectory |
//! | DELETE | `/demos/{id}` | remove a trajectory |
//! | POST | `/train` | start training; returns a token and posterior id |
//! | GET | `/train/{token}` | training status |
//! | GET | `/posterior/{id}/marginals` | per-feature marginals |
//! | GET | `/posterior/{id}/entropy` | normalized marginal entropies |
//! | POST | `/select` | weights and costmap for an epsilon |
//! | POST | `/plan` | plan between two cells |
//! | GET | `/teleop` | WebSocket teleoperation |

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use rabrl_core::bayes::{compute_posterior, Marginal, Posterior, PriorSpec, RewardSpace};
use rabrl_core::envmodel::{Action, Cell, DemonstrationSet, Environment, Trajectory};
use rabrl_core::experiment::{bayesian_result, load_demos, ExperimentConfig};
use rabrl_core::maxent::{maxent_irl_fit, MaxEntFitConfig, RewardVector};
use rabrl_core::planner::{plan, PlanResult, RiskSpec};
use rabrl_core::riskselect::{build_costmap, normalized_entropy_with, Costmap, SelectionConfig};
use rabrl_core::Error as CoreError;

/// Everything a session needs at start-up.
#[derive(Clone, Debug)]
pub struct SessionConfig {
    pub env: Environment,
    pub start: Cell,
    pub goal: Cell,
    pub weight_set: Vec<f64>,
    pub beta: f64,
    pub epsilon: f64,
    pub selection: SelectionConfig,
    pub dirichlet_alpha: Option<Vec<f64>>,
    pub dangerous_feature: Option<usize>,
    pub baseline: MaxEntFitConfig,
    pub demos: Vec<Trajectory>,
}

impl SessionConfig {
    /// Session over the training environment and demonstrations of an
    /// experiment configuration.
    pub fn from_experiment(cfg: &ExperimentConfig) -> rabrl_core::Result<Self> {
        let env = Environment::load(&cfg.train_environment)?;
        let demos = load_demos(cfg, &env)?;
        Ok(SessionConfig {
            dangerous_feature: cfg.dangerous_feature.resolve(&env).ok(),
            start: demos.start,
            goal: demos.goal,
            weight_set: cfg.weight_set.clone(),
            beta: cfg.beta,
            epsilon: cfg.epsilon,
            selection: cfg.selection(cfg.epsilon)?,
            dirichlet_alpha: cfg.dirichlet_alpha.clone(),
            baseline: cfg.baseline,
            demos: demos.trajectories,
            env,
        })
    }
}

struct StoredPosterior {
    posterior: Posterior,
    beta: f64,
    prior: PriorSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum JobStatus {
    Running { posterior_id: u64 },
    Done { posterior_id: u64 },
    Failed { posterior_id: u64, error: String },
}

struct Session {
    cfg: SessionConfig,
    env_json: String,
    space: RewardSpace,
    demos: BTreeMap<u64, Trajectory>,
    next_demo: u64,
    posteriors: BTreeMap<u64, Arc<StoredPosterior>>,
    next_posterior: u64,
    jobs: BTreeMap<u64, JobStatus>,
    next_token: u64,
    training: bool,
    selected: Option<RewardVector>,
}

impl Session {
    fn demo_set(&self) -> DemonstrationSet {
        DemonstrationSet {
            start: self.cfg.start,
            goal: self.cfg.goal,
            trajectories: self.demos.values().cloned().collect(),
        }
    }

    fn posterior(&self, id: u64) -> Result<Arc<StoredPosterior>, ApiError> {
        self.posteriors
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown posterior id {id}")))
    }

    fn latest_posterior(&self) -> Result<(u64, Arc<StoredPosterior>), ApiError> {
        self.posteriors
            .iter()
            .next_back()
            .map(|(id, p)| (*id, p.clone()))
            .ok_or_else(|| ApiError::not_found("no posterior trained yet".into()))
    }

    /// Checks a trajectory against the environment and session endpoints.
    fn check_trajectory(&self, t: &Trajectory) -> Result<(), ApiError> {
        t.validate(&self.cfg.env).map_err(ApiError::from)?;
        if t.first() != Some(self.cfg.start) {
            return Err(ApiError::bad_request(
                format!("trajectory must begin at start {}", self.cfg.start),
                Some(0),
            ));
        }
        if t.steps() > self.cfg.env.horizon() {
            return Err(ApiError::bad_request(
                format!("trajectory has {} steps, horizon is {}", t.steps(), self.cfg.env.horizon()),
                Some(self.cfg.env.horizon() + 1),
            ));
        }
        Ok(())
    }

    fn add_demo(&mut self, t: Trajectory) -> Result<u64, ApiError> {
        self.check_trajectory(&t)?;
        let id = self.next_demo;
        self.next_demo += 1;
        self.demos.insert(id, t);
        Ok(id)
    }
}

/// Shared handle to the single session.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<RwLock<Session>>,
}

impl AppState {
    pub fn new(cfg: SessionConfig) -> rabrl_core::Result<Self> {
        let space = RewardSpace::new(cfg.weight_set.clone(), cfg.env.feature_dim())?;
        cfg.selection.validate()?;
        if !cfg.env.is_open(cfg.start) || !cfg.env.is_open(cfg.goal) {
            return Err(CoreError::InvalidParameter("start and goal must be open cells".into()));
        }
        let mut session = Session {
            env_json: cfg.env.to_json(),
            space,
            demos: BTreeMap::new(),
            next_demo: 0,
            posteriors: BTreeMap::new(),
            next_posterior: 0,
            jobs: BTreeMap::new(),
            next_token: 0,
            training: false,
            selected: None,
            cfg,
        };
        for t in std::mem::take(&mut session.cfg.demos) {
            session
                .add_demo(t)
                .map_err(|e| CoreError::InvalidDemonstrations(e.message))?;
        }
        Ok(AppState {
            inner: Arc::new(RwLock::new(session)),
        })
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Session> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, Session> {
        self.inner.write().unwrap_or_else(|e| e.into_inner())
    }
}

/// JSON error body: `{"error": message, "index": offending state}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    index: Option<usize>,
}

impl ApiError {
    fn bad_request(message: String, index: Option<usize>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message,
            index,
        }
    }

    fn not_found(message: String) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            message,
            index: None,
        }
    }

    fn body(&self) -> serde_json::Value {
        match self.index {
            Some(i) => json!({ "error": self.message, "index": i }),
            None => json!({ "error": self.message }),
        }
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let index = match &e {
            CoreError::InvalidTrajectory { index, .. } => Some(*index),
            _ => None,
        };
        let status = match &e {
            CoreError::Unreachable { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            CoreError::DegeneratePosterior | CoreError::Diverged { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError {
            status,
            message: e.to_string(),
            index,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body())).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/env", get(get_env))
        .route("/demos", get(list_demos).post(add_demo))
        .route("/demos/{id}", delete(delete_demo))
        .route("/train", post(start_train))
        .route("/train/{token}", get(train_status))
        .route("/posterior/{id}/marginals", get(get_marginals))
        .route("/posterior/{id}/entropy", get(get_entropy))
        .route("/select", post(select))
        .route("/plan", post(plan_route))
        .route("/teleop", get(teleop))
        .with_state(state)
}

/// Serves the session on `addr` until the process exits.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    serve_listener(listener, state).await
}

/// Serves on an already bound listener, which lets callers learn the port first.
pub async fn serve_listener(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

async fn get_env(State(s): State<AppState>) -> Response {
    let body = s.read().env_json.clone();
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

#[derive(Serialize)]
struct DemoEntry {
    id: u64,
    trajectory: Trajectory,
}

async fn list_demos(State(s): State<AppState>) -> Json<serde_json::Value> {
    let s = s.read();
    let demos: Vec<DemoEntry> = s
        .demos
        .iter()
        .map(|(id, t)| DemoEntry {
            id: *id,
            trajectory: t.clone(),
        })
        .collect();
    Json(json!({ "start": s.cfg.start, "goal": s.cfg.goal, "demos": demos }))
}

#[derive(Deserialize)]
struct NewDemo {
    trajectory: Trajectory,
}

async fn add_demo(State(s): State<AppState>, Json(req): Json<NewDemo>) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    let mut s = s.write();
    let id = s.add_demo(req.trajectory)?;
    Ok((StatusCode::CREATED, Json(json!({ "id": id, "count": s.demos.len() }))))
}

async fn delete_demo(State(s): State<AppState>, Path(id): Path<u64>) -> ApiResult<StatusCode> {
    match s.write().demos.remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::not_found(format!("unknown demonstration id {id}"))),
    }
}

#[derive(Deserialize, Default)]
#[serde(default)]
struct TrainRequest {
    beta: Option<f64>,
    prior: Option<PriorSpec>,
}

async fn start_train(State(state): State<AppState>, body: Option<Json<TrainRequest>>) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    let req = body.map(|Json(r)| r).unwrap_or_default();
    let (token, posterior_id, env, demos, space, beta, prior) = {
        let mut s = state.write();
        if s.training {
            return Err(ApiError {
                status: StatusCode::CONFLICT,
                message: "training already in progress".into(),
                index: None,
            });
        }
        if s.demos.is_empty() {
            return Err(ApiError::bad_request("no demonstrations recorded".into(), None));
        }
        let beta = req.beta.unwrap_or(s.cfg.beta);
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(ApiError::bad_request(format!("beta must be finite and >= 0, got {beta}"), None));
        }
        let prior = req.prior.unwrap_or(PriorSpec::ModifiedUniform);
        prior.validate(s.cfg.env.feature_dim())?;
        let token = s.next_token;
        let posterior_id = s.next_posterior;
        s.next_token += 1;
        s.next_posterior += 1;
        s.training = true;
        s.jobs.insert(token, JobStatus::Running { posterior_id });
        (token, posterior_id, s.cfg.env.clone(), s.demo_set(), s.space.clone(), beta, prior)
    };
    let worker = state.clone();
    tokio::task::spawn_blocking(move || {
        let result = compute_posterior(&env, &demos, beta, &space, &prior);
        let mut s = worker.write();
        s.training = false;
        let status = match result {
            Ok(posterior) => {
                s.posteriors.insert(posterior_id, Arc::new(StoredPosterior { posterior, beta, prior }));
                JobStatus::Done { posterior_id }
            }
            Err(e) => JobStatus::Failed {
                posterior_id,
                error: e.to_string(),
            },
        };
        s.jobs.insert(token, status);
    });
    Ok((StatusCode::ACCEPTED, Json(json!({ "token": token, "posterior_id": posterior_id }))))
}

async fn train_status(State(s): State<AppState>, Path(token): Path<u64>) -> ApiResult<Json<JobStatus>> {
    s.read()
        .jobs
        .get(&token)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("unknown training token {token}")))
}

#[derive(Serialize)]
struct MarginalsBody {
    features: Vec<String>,
    beta: f64,
    prior: PriorSpec,
    marginals: Vec<Marginal>,
}

async fn get_marginals(State(s): State<AppState>, Path(id): Path<u64>) -> ApiResult<Json<MarginalsBody>> {
    let s = s.read();
    let p = s.posterior(id)?;
    Ok(Json(MarginalsBody {
        features: s.cfg.env.feature_names().to_vec(),
        beta: p.beta,
        prior: p.prior.clone(),
        marginals: p.posterior.marginals(),
    }))
}

fn entropies(p: &Posterior, sel: SelectionConfig) -> Vec<f64> {
    let dim = p.space().dim();
    p.marginals()
        .iter()
        .map(|m| normalized_entropy_with(m, sel.normalization, dim))
        .collect()
}

async fn get_entropy(State(s): State<AppState>, Path(id): Path<u64>) -> ApiResult<Json<serde_json::Value>> {
    let s = s.read();
    let p = s.posterior(id)?;
    Ok(Json(json!({
        "features": s.cfg.env.feature_names(),
        "entropy": entropies(&p.posterior, s.cfg.selection),
    })))
}

#[derive(Deserialize, Default)]
#[serde(default)]
struct SelectRequest {
    epsilon: Option<f64>,
    posterior_id: Option<u64>,
}

#[derive(Serialize)]
pub struct SelectResponse {
    pub posterior_id: u64,
    pub epsilon: f64,
    pub entropy: Vec<f64>,
    pub weights: RewardVector,
    pub costmap: Costmap,
}

async fn select(State(state): State<AppState>, body: Option<Json<SelectRequest>>) -> ApiResult<Json<SelectResponse>> {
    let req = body.map(|Json(r)| r).unwrap_or_default();
    let mut s = state.write();
    let (id, p) = match req.posterior_id {
        Some(id) => (id, s.posterior(id)?),
        None => s.latest_posterior()?,
    };
    let sel = SelectionConfig {
        epsilon: req.epsilon.unwrap_or(s.cfg.epsilon),
        normalization: s.cfg.selection.normalization,
    };
    sel.validate()?;
    let result = bayesian_result(rabrl_core::experiment::ModelKind::RabrlUniform, p.posterior.clone(), sel)?;
    let costmap = build_costmap(&s.cfg.env, &result.weights)?;
    s.selected = Some(result.weights.clone());
    Ok(Json(SelectResponse {
        posterior_id: id,
        epsilon: sel.epsilon,
        entropy: result.entropies,
        weights: result.weights,
        costmap,
    }))
}

/// Which weights to plan with.
#[derive(Deserialize, Default, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum PlanModel {
    /// Weights from the latest `/select`.
    #[default]
    Selected,
    /// MaxEnt baseline fitted on the current demonstrations.
    MaxentBaseline,
}

#[derive(Deserialize)]
struct PlanRequest {
    start: Cell,
    goal: Cell,
    #[serde(default)]
    model: PlanModel,
    /// Explicit weights; overrides `model`.
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct PlanResponse {
    weights: RewardVector,
    #[serde(flatten)]
    plan: PlanResult,
}

async fn plan_route(State(state): State<AppState>, Json(req): Json<PlanRequest>) -> ApiResult<Json<PlanResponse>> {
    let (env, weights, demos, baseline, risk) = {
        let s = state.read();
        (
            s.cfg.env.clone(),
            req.weights.clone().map(RewardVector).or_else(|| s.selected.clone()),
            s.demo_set(),
            s.cfg.baseline,
            s.cfg.dangerous_feature,
        )
    };
    let weights = match (req.weights.is_some(), req.model) {
        (false, PlanModel::MaxentBaseline) => {
            if demos.is_empty() {
                return Err(ApiError::bad_request("no demonstrations recorded".into(), None));
            }
            let init = vec![0.0; env.feature_dim()];
            tokio::task::spawn_blocking(move || maxent_irl_fit(&env, &demos, baseline, &init))
                .await
                .map_err(|e| ApiError::bad_request(e.to_string(), None))??
        }
        _ => weights.ok_or_else(|| ApiError::bad_request("no weights selected; call /select first".into(), None))?,
    };
    let env = state.read().cfg.env.clone();
    let costmap = build_costmap(&env, &weights)?;
    let mut result = plan(&costmap, req.start, req.goal)?;
    if let Some(f) = risk {
        result = result.assess(&env, RiskSpec { dangerous_feature: f });
    }
    Ok(Json(PlanResponse { weights, plan: result }))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TeleopMessage {
    Step { action: Action },
    Command { command: TeleopCommand },
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum TeleopCommand {
    Commit,
    Reset,
}

async fn teleop(State(state): State<AppState>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| teleop_session(state, socket))
}

fn state_message(env: &Environment, c: Cell, steps: usize) -> serde_json::Value {
    json!({
        "state": c,
        "features": env.features_at(c).unwrap_or(&[]),
        "steps": steps,
    })
}

/// Applies one teleop message to the pending trajectory and returns the reply.
fn teleop_reply(state: &AppState, pending: &mut Vec<Cell>, text: &str) -> serde_json::Value {
    let msg: TeleopMessage = match serde_json::from_str(text) {
        Ok(m) => m,
        Err(e) => return json!({ "error": format!("bad message: {e}") }),
    };
    match msg {
        TeleopMessage::Step { action } => {
            let s = state.read();
            let env = &s.cfg.env;
            if pending.len() > env.horizon() {
                return json!({ "error": format!("horizon of {} steps reached", env.horizon()) });
            }
            let here = *pending.last().expect("pending trajectory holds the start");
            let next = env.step(here, action);
            pending.push(next);
            state_message(env, next, pending.len() - 1)
        }
        TeleopMessage::Command { command: TeleopCommand::Reset } => {
            let s = state.read();
            *pending = vec![s.cfg.start];
            state_message(&s.cfg.env, s.cfg.start, 0)
        }
        TeleopMessage::Command { command: TeleopCommand::Commit } => {
            let mut s = state.write();
            match s.add_demo(Trajectory::new(pending.clone())) {
                Ok(id) => {
                    let start = s.cfg.start;
                    *pending = vec![start];
                    json!({ "committed": id, "count": s.demos.len() })
                }
                Err(e) => e.body(),
            }
        }
    }
}

async fn teleop_session(state: AppState, mut socket: WebSocket) {
    let start = state.read().cfg.start;
    let mut pending = vec![start];
    let hello = {
        let s = state.read();
        state_message(&s.cfg.env, start, 0)
    };
    if socket.send(Message::Text(hello.to_string().into())).await.is_err() {
        return;
    }
    while let Some(Ok(msg)) = socket.recv().await {
        let reply = match msg {
            Message::Text(text) => teleop_reply(&state, &mut pending, text.as_str()),
            Message::Close(_) => break,
            _ => continue,
        };
        if socket.send(Message::Text(reply.to_string().into())).await.is_err() {
            break;
        }
    }
}
