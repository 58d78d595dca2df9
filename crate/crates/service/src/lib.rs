//! HTTP API over the feature toolkit: feature objects, feature sets, plot
//! data, the problem catalog and batch jobs.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::OnceCell;

use lkit::features::gcm::Approach;
use lkit::pipeline::{columns, row_json, row_values, run_batch, write_batch_csv, BatchConfig, Built, Instance, ObjectSpec};
use lkit::problems::{list_problems, make_problem};
use lkit::vizdata::{self, TreeMode};
use lkit::{calculate_features, Control, FeatureSet, FeatureValue, SampleMethod};

mod error;
pub mod lru;
mod openapi;

pub use error::ApiError;
use lru::Lru;

pub const OBJECT_CAPACITY: usize = 64;
pub const JOB_CAPACITY: usize = 16;

type Computed = Result<Arc<FeaturePayload>, ApiError>;

/// A cached feature object plus its memoized feature computations.
pub struct Entry {
    pub id: String,
    pub spec: ObjectSpec,
    pub built: Built,
    features: Mutex<HashMap<String, Arc<OnceCell<Computed>>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Running,
    Done,
    Failed,
}

pub struct Job {
    total: usize,
    completed: AtomicUsize,
    outcome: std::sync::OnceLock<Result<String, String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobView {
    pub job_id: String,
    pub status: JobStatus,
    pub progress: f64,
    pub completed: usize,
    pub total: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result_csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Job {
    fn view(&self, id: &str) -> JobView {
        let completed = self.completed.load(Ordering::Acquire);
        let (status, result_csv, error) = match self.outcome.get() {
            None => (JobStatus::Running, None, None),
            Some(Ok(csv)) => (JobStatus::Done, Some(csv.clone()), None),
            Some(Err(e)) => (JobStatus::Failed, None, Some(e.clone())),
        };
        JobView {
            job_id: id.to_string(),
            status,
            progress: if self.total == 0 { 1.0 } else { completed as f64 / self.total as f64 },
            completed,
            total: self.total,
            result_csv,
            error,
        }
    }
}

pub struct AppState {
    objects: Mutex<Lru<String, Arc<Entry>>>,
    jobs: Mutex<Lru<String, Arc<Job>>>,
    spill_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(spill_dir: Option<PathBuf>) -> Arc<Self> {
        Arc::new(AppState {
            objects: Mutex::new(Lru::new(OBJECT_CAPACITY)),
            jobs: Mutex::new(Lru::new(JOB_CAPACITY)),
            spill_dir,
        })
    }

    pub fn from_env() -> Arc<Self> {
        Self::new(std::env::var_os("LKIT_SPILL_DIR").map(PathBuf::from))
    }

    fn spill_path(&self, kind: &str, id: &str) -> Option<PathBuf> {
        self.spill_dir.as_ref().map(|d| d.join(kind).join(format!("{}.json", id)))
    }

    fn spill(&self, kind: &str, id: &str, value: &impl Serialize) {
        if let Some(p) = self.spill_path(kind, id) {
            let write = || -> std::io::Result<()> {
                std::fs::create_dir_all(p.parent().unwrap())?;
                std::fs::write(&p, serde_json::to_vec(value)?)
            };
            if let Err(e) = write() {
                eprintln!("spill {}: {}", p.display(), e);
            }
        }
    }

    fn insert_object(&self, entry: Arc<Entry>) {
        let evicted = self.objects.lock().unwrap().insert(entry.id.clone(), entry);
        if let Some((id, e)) = evicted {
            self.spill("objects", &id, &e.spec);
        }
    }

    /// Looks up an object, rebuilding it from a spilled spec if needed.
    async fn object(&self, id: &str) -> Result<Arc<Entry>, ApiError> {
        let cached = self.objects.lock().unwrap().get(&id.to_string());
        if let Some(e) = cached {
            return Ok(e);
        }
        let spec: ObjectSpec = self
            .spill_path("objects", id)
            .and_then(|p| std::fs::read(p).ok())
            .and_then(|b| serde_json::from_slice(&b).ok())
            .ok_or_else(|| ApiError::not_found("feature object", id))?;
        let entry = build_entry(id.to_string(), spec).await?;
        self.insert_object(entry.clone());
        Ok(entry)
    }

    fn insert_job(&self, id: String, job: Arc<Job>) {
        let evicted = self.jobs.lock().unwrap().insert(id, job);
        if let Some((id, j)) = evicted {
            self.spill("jobs", &id, &j.view(&id));
        }
    }

    fn job(&self, id: &str) -> Result<JobView, ApiError> {
        if let Some(j) = self.jobs.lock().unwrap().get(&id.to_string()) {
            return Ok(j.view(id));
        }
        self.spill_path("jobs", id)
            .and_then(|p| std::fs::read(p).ok())
            .and_then(|b| serde_json::from_slice(&b).ok())
            .ok_or_else(|| ApiError::not_found("batch job", id))
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
}

async fn build_entry(id: String, spec: ObjectSpec) -> Result<Arc<Entry>, ApiError> {
    let s = spec.clone();
    let built = blocking(move || s.build()).await??;
    Ok(Arc::new(Entry {
        id,
        spec,
        built,
        features: Mutex::new(HashMap::new()),
    }))
}

pub fn app(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/feature-object", post(create_object))
        .route("/api/feature-object/{id}", get(get_object))
        .route("/api/feature-object/{id}/features", get(features_json))
        .route("/api/feature-object/{id}/features.csv", get(features_csv))
        .route("/api/feature-object/{id}/plot/{kind}", get(plot))
        .route("/api/batch", post(create_batch))
        .route("/api/batch/{job_id}", get(get_batch))
        .route("/api/batch/{job_id}/result.csv", get(get_batch_csv))
        .route("/api/problems", get(problems))
        .route("/api/sets", get(sets))
        .route("/api/spec", get(spec))
        .with_state(state)
}

fn json_body<T>(body: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    body.map(|Json(v)| v)
        .map_err(|r| ApiError::unprocessable(r.body_text()))
}

#[derive(Serialize)]
struct SetAvailability {
    id: &'static str,
    available: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
}

fn object_view(e: &Entry) -> Value {
    let availability: Vec<SetAvailability> = FeatureSet::ALL
        .iter()
        .map(|s| {
            let r = s.check_available(&e.built.object);
            SetAvailability {
                id: s.id(),
                available: r.is_ok(),
                reason: r.err().map(|e| e.to_string()),
            }
        })
        .collect();
    json!({
        "id": e.id,
        "summary": e.built.object.summarize(),
        "problem": e.built.problem.as_ref().map(|p| p.info()),
        "sets": availability,
    })
}

async fn create_object(
    State(state): State<Arc<AppState>>,
    body: Result<Json<ObjectSpec>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let spec = json_body(body)?;
    let id = uuid::Uuid::new_v4().to_string();
    let entry = build_entry(id, spec).await?;
    let view = object_view(&entry);
    state.insert_object(entry);
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_object(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let entry = state.object(&id).await?;
    Ok(Json(object_view(&entry)))
}

/// Query parameters: `sets` (comma separated or `all`), `seed`, and
/// `control` entries `key=value`, repeated or separated by `;`.
#[derive(Debug)]
struct FeatureQuery {
    sets: Vec<FeatureSet>,
    control: Control,
    seed: Option<u64>,
    key: String,
}

fn parse_feature_query(params: &[(String, String)]) -> Result<FeatureQuery, ApiError> {
    let mut sets = "all".to_string();
    let mut pairs = Vec::new();
    let mut seed = None;
    for (k, v) in params {
        match k.as_str() {
            "sets" => sets = v.clone(),
            "control" => pairs.extend(v.split(';').filter(|s| !s.is_empty()).map(str::to_string)),
            "seed" => seed = Some(v.parse().map_err(|_| ApiError::unprocessable(format!("bad seed `{}`", v)))?),
            _ => {}
        }
    }
    let sets = FeatureSet::parse_list(&sets)?;
    let control = Control::from_pairs(&pairs)?;
    let mut control_key: Vec<String> = control.iter().map(|(k, v)| format!("{}={}", k, v)).collect();
    control_key.sort();
    let set_ids: Vec<&str> = sets.iter().map(|s| s.id()).collect();
    let key = format!("{}|{}|{:?}", set_ids.join(","), control_key.join(";"), seed);
    Ok(FeatureQuery {
        sets,
        control,
        seed,
        key,
    })
}

#[derive(Debug, Serialize)]
pub struct FeaturePayload {
    pub id: String,
    pub seed: u64,
    pub sets: Vec<&'static str>,
    pub features: Value,
    #[serde(skip)]
    columns: Vec<String>,
    #[serde(skip)]
    values: Vec<FeatureValue>,
}

/// Computes (or joins an in-flight computation of) the requested features.
async fn compute_features(entry: Arc<Entry>, q: FeatureQuery) -> Computed {
    for s in &q.sets {
        s.check_available(&entry.built.object)?;
    }
    let cell = {
        let mut cache = entry.features.lock().unwrap();
        cache.entry(q.key.clone()).or_default().clone()
    };
    cell.get_or_init(|| {
        let entry = entry.clone();
        async move {
            let seed = q.seed.unwrap_or(entry.spec.seed);
            let e = entry.clone();
            let (sets, control) = (q.sets.clone(), q.control.clone());
            let mut results = blocking(move || calculate_features(&e.built.object, &sets, &control, seed)).await?;
            if let Some(i) = results.iter().position(|r| r.1.is_err()) {
                if let Err(e) = results.swap_remove(i).1 {
                    return Err(e.into());
                }
            }
            let cols = columns(&q.sets, &q.control)?;
            Ok(Arc::new(FeaturePayload {
                id: entry.id.clone(),
                seed,
                sets: q.sets.iter().map(|s| s.id()).collect(),
                features: row_json(&results, &cols),
                values: row_values(&results, &cols),
                columns: cols,
            }))
        }
    })
    .await
    .clone()
}

async fn features_json(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(params): Query<Vec<(String, String)>>,
) -> Result<Response, ApiError> {
    let q = parse_feature_query(&params)?;
    let entry = state.object(&id).await?;
    let p = compute_features(entry, q).await?;
    Ok(Json(&*p).into_response())
}

fn csv_response(body: String, filename: &str) -> Response {
    (
        [
            (header::CONTENT_TYPE, "text/csv; charset=utf-8".to_string()),
            (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{}\"", filename)),
        ],
        body,
    )
        .into_response()
}

async fn features_csv(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(params): Query<Vec<(String, String)>>,
) -> Result<Response, ApiError> {
    let q = parse_feature_query(&params)?;
    let entry = state.object(&id).await?;
    let p = compute_features(entry, q).await?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string());
    w.write_record(&p.columns).map_err(csv_err)?;
    w.write_record(p.values.iter().map(|v| match v {
        FeatureValue::Missing => String::new(),
        other => other.to_string(),
    }))
    .map_err(csv_err)?;
    let bytes = w
        .into_inner()
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(csv_response(String::from_utf8_lossy(&bytes).into_owned(), "features.csv"))
}

#[derive(Debug, Deserialize)]
struct PlotQuery {
    approach: Option<String>,
    resolution: Option<usize>,
    seed: Option<u64>,
    control: Option<String>,
}

async fn plot(
    State(state): State<Arc<AppState>>,
    Path((id, kind)): Path<(String, String)>,
    Query(q): Query<PlotQuery>,
) -> Result<Json<Value>, ApiError> {
    let entry = state.object(&id).await?;
    let approach: Approach = q.approach.as_deref().unwrap_or("min").parse()?;
    let control = Control::from_pairs(
        q.control
            .as_deref()
            .unwrap_or("")
            .split(';')
            .filter(|s| !s.is_empty()),
    )?;
    let seed = q.seed.unwrap_or(entry.spec.seed);
    let resolution = q.resolution.unwrap_or(100);
    let value = blocking(move || -> Result<Value, ApiError> {
        let fo = &entry.built.object;
        let v = match kind.as_str() {
            "cellmapping" => serde_json::to_value(vizdata::cell_mapping_plot_data(fo, approach, &control)?),
            "barriertree2d" => serde_json::to_value(vizdata::barrier_tree_plot_data(fo, approach, TreeMode::TwoD, &control)?),
            "barriertree3d" => serde_json::to_value(vizdata::barrier_tree_plot_data(fo, approach, TreeMode::ThreeD, &control)?),
            "infocontent" => serde_json::to_value(vizdata::info_content_plot_data(fo, &control, seed)?),
            "function" => {
                let p = entry
                    .built
                    .problem
                    .as_ref()
                    .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "function plot requires a function"))?;
                serde_json::to_value(vizdata::objective_grid(p, fo.lower(), fo.upper(), resolution)?)
            }
            other => return Err(ApiError::not_found("plot kind", other)),
        };
        v.map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
    })
    .await??;
    Ok(Json(value))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchRequest {
    pub instances: Vec<Instance>,
    #[serde(default = "one")]
    pub reps: usize,
    #[serde(default = "all_sets")]
    pub sets: String,
    #[serde(default)]
    pub sampling: SampleMethod,
    pub n: Option<usize>,
    pub blocks: Option<Vec<usize>>,
    #[serde(default)]
    pub control: Vec<String>,
    #[serde(default = "one_u64")]
    pub seed: u64,
}

fn one() -> usize {
    1
}

fn one_u64() -> u64 {
    1
}

fn all_sets() -> String {
    "all".to_string()
}

async fn create_batch(
    State(state): State<Arc<AppState>>,
    body: Result<Json<BatchRequest>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let req = json_body(body)?;
    if req.instances.is_empty() {
        return Err(ApiError::unprocessable("instances must not be empty"));
    }
    if req.reps == 0 {
        return Err(ApiError::unprocessable("reps must be ≥ 1"));
    }
    let invalid: Vec<Value> = req
        .instances
        .iter()
        .enumerate()
        .filter_map(|(i, inst)| {
            make_problem(&inst.problem, inst.dim, inst.seed)
                .err()
                .map(|e| json!({ "index": i, "message": e.to_string() }))
        })
        .collect();
    if !invalid.is_empty() {
        return Err(ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            body: json!({ "error": "invalid instances", "instances": invalid }),
        });
    }
    let config = BatchConfig {
        sets: FeatureSet::parse_list(&req.sets)?,
        reps: req.reps,
        n: req.n,
        sample: req.sampling,
        blocks: req.blocks,
        control: Control::from_pairs(&req.control)?,
        seed: req.seed,
    };
    let job = Arc::new(Job {
        total: req.instances.len() * req.reps,
        completed: AtomicUsize::new(0),
        outcome: std::sync::OnceLock::new(),
    });
    let id = uuid::Uuid::new_v4().to_string();
    state.insert_job(id.clone(), job.clone());
    let instances = req.instances;
    tokio::task::spawn_blocking(move || {
        let rows = run_batch(&instances, &config, &|| {
            job.completed.fetch_add(1, Ordering::AcqRel);
        });
        let mut buf = Vec::new();
        let outcome = write_batch_csv(&mut buf, &rows, &config.sets, &config.control)
            .map(|_| String::from_utf8_lossy(&buf).into_owned())
            .map_err(|e| e.to_string());
        let _ = job.outcome.set(outcome);
    });
    Ok((StatusCode::ACCEPTED, Json(json!({ "job_id": id }))))
}

async fn get_batch(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<JobView>, ApiError> {
    Ok(Json(state.job(&id)?))
}

async fn get_batch_csv(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let view = state.job(&id)?;
    match view.result_csv {
        Some(csv) => Ok(csv_response(csv, "batch.csv")),
        None => Err(ApiError::new(StatusCode::CONFLICT, "batch job has not finished")),
    }
}

async fn problems() -> Json<Value> {
    Json(json!(list_problems()))
}

async fn sets() -> Json<Value> {
    let sets: Vec<Value> = FeatureSet::ALL
        .iter()
        .map(|s| {
            json!({
                "id": s.id(),
                "description": s.description(),
                "requires_function": s.requires_function(),
                "requires_blocks": s.requires_blocks(),
                "stochastic": s.stochastic(),
            })
        })
        .collect();
    Json(Value::Array(sets))
}

async fn spec() -> Json<Value> {
    Json(openapi::document())
}
