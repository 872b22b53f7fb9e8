//! HTTP JSON service over a directory of model files.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | `/v1/models` | multipart: `data` (CSV), optional `config` (JSON settings) | 201, model summary |
//! | GET | `/v1/models` | | list of summaries |
//! | GET | `/v1/models/{id}` | | summary plus calibration quantities |
//! | POST | `/v1/models/{id}/predict` | [`PredictRequest`] | [`PredictResponse`] |
//!
//! Errors are `{code, message, detail}` with a matching status.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use survconf_core::{PredictionInterval, Sidedness};

use crate::error::{AppError, AppResult};
use crate::io::ingest_csv;
use crate::model::{FitSettings, ModelDetail, ModelRecord, ModelSummary};

const UPLOAD_LIMIT: usize = 64 << 20;

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.body())).into_response()
    }
}

/// File-per-model store. Records are immutable once written; creation is
/// serialized so two uploads of the same content cannot race on one file.
pub struct Store {
    dir: PathBuf,
    create: Mutex<()>,
}

impl Store {
    pub fn open(dir: PathBuf) -> AppResult<Self> {
        std::fs::create_dir_all(&dir).map_err(|e| AppError::io(&dir, e))?;
        Ok(Self {
            dir,
            create: Mutex::new(()),
        })
    }

    fn path(&self, id: &str) -> AppResult<PathBuf> {
        if id.is_empty() || !id.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(AppError::NotFound(format!("model '{id}'")));
        }
        Ok(self.dir.join(format!("{id}.json")))
    }

    pub fn get(&self, id: &str) -> AppResult<ModelRecord> {
        let p = self.path(id)?;
        if !p.exists() {
            return Err(AppError::NotFound(format!("model '{id}'")));
        }
        ModelRecord::load(&p)
    }

    pub fn list(&self) -> AppResult<Vec<ModelSummary>> {
        let entries = std::fs::read_dir(&self.dir).map_err(|e| AppError::io(&self.dir, e))?;
        let mut out = Vec::new();
        for entry in entries {
            let p = entry.map_err(|e| AppError::io(&self.dir, e))?.path();
            if p.extension().is_some_and(|x| x == "json") {
                out.push(ModelRecord::load(&p)?.summary());
            }
        }
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(out)
    }

    /// Stores `record` unless a record with the same id exists, and returns
    /// the stored one.
    pub async fn insert(&self, mut record: ModelRecord) -> AppResult<ModelRecord> {
        let _guard = self.create.lock().await;
        let p = self.path(&record.id)?;
        if p.exists() {
            return ModelRecord::load(&p);
        }
        record.created_at = Some(
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        );
        record.save(&p)?;
        Ok(record)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

type Shared = Arc<Store>;

pub fn router(store: Store) -> Router {
    Router::new()
        .route("/v1/models", get(list_models).post(create_model))
        .route("/v1/models/{id}", get(get_model))
        .route("/v1/models/{id}/predict", post(predict))
        .layer(DefaultBodyLimit::max(UPLOAD_LIMIT))
        .with_state(Arc::new(store))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> AppResult<T> + Send + 'static) -> AppResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| AppError::Internal(format!("worker failed: {e}")))?
}

async fn list_models(State(store): State<Shared>) -> AppResult<Json<Vec<ModelSummary>>> {
    Ok(Json(blocking(move || store.list()).await?))
}

async fn get_model(State(store): State<Shared>, UrlPath(id): UrlPath<String>) -> AppResult<Json<ModelDetail>> {
    Ok(Json(blocking(move || store.get(&id).map(|r| r.detail())).await?))
}

async fn create_model(State(store): State<Shared>, mut form: Multipart) -> AppResult<(StatusCode, Json<ModelSummary>)> {
    let bad = |e: axum::extract::multipart::MultipartError| AppError::BadRequest(e.body_text());
    let mut data = None;
    let mut settings = FitSettings::default();
    while let Some(field) = form.next_field().await.map_err(bad)? {
        match field.name() {
            Some("data") => data = Some(field.bytes().await.map_err(bad)?),
            Some("config") => {
                let text = field.text().await.map_err(bad)?;
                if !text.trim().is_empty() {
                    settings = FitSettings::from_json(&text)?;
                }
            }
            other => return Err(AppError::BadRequest(format!("unexpected form field {other:?}"))),
        }
    }
    let data = data.ok_or_else(|| AppError::BadRequest("missing form field 'data'".into()))?;
    let record = blocking(move || {
        let cfg = settings.conformal()?;
        let dataset = ingest_csv(data.as_ref())?;
        ModelRecord::fit(dataset, cfg, settings.seed())
    })
    .await?;
    let stored = store.insert(record).await?;
    Ok((StatusCode::CREATED, Json(stored.summary())))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Covariate values replacing those of the base profile.
    pub covariates: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRequest {
    pub covariates: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, rename = "c_L", alias = "c_l", skip_serializing_if = "Option::is_none")]
    pub c_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sidedness: Option<Sidedness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncate_at_eta: Option<bool>,
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
}

/// One interval as sent over the wire. `upper` is null for one-sided
/// intervals; `capped` marks an upper end at the largest observed failure
/// time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalView {
    pub scenario: String,
    pub lower: f64,
    pub upper: Option<f64>,
    pub capped: bool,
    pub alpha: f64,
    #[serde(rename = "c_L")]
    pub c_l: f64,
}

impl IntervalView {
    fn new(scenario: String, iv: &PredictionInterval) -> Self {
        let upper = iv.upper_value();
        Self {
            scenario,
            lower: iv.lower,
            upper: upper.is_finite().then_some(upper),
            capped: iv.capped(),
            alpha: iv.alpha,
            c_l: iv.conditioning_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub model_id: String,
    pub intervals: Vec<IntervalView>,
}

/// Pure function of the record and the request.
pub fn predict_record(record: &ModelRecord, req: &PredictRequest) -> AppResult<PredictResponse> {
    let cfg = record.request_config(req.alpha, req.sidedness, req.truncate_at_eta)?;
    let mut names = vec!["base".to_string()];
    let mut xs = vec![record.profile(&req.covariates)?];
    for (i, s) in req.scenarios.iter().enumerate() {
        let mut merged = req.covariates.clone();
        merged.extend(s.covariates.iter().map(|(k, v)| (k.clone(), *v)));
        xs.push(record.profile(&merged)?);
        names.push(s.name.clone().unwrap_or_else(|| format!("scenario {}", i + 1)));
    }
    let intervals = record.predict_many(&xs, &cfg, req.c_l.unwrap_or(0.0))?;
    Ok(PredictResponse {
        model_id: record.id.clone(),
        intervals: names
            .into_iter()
            .zip(&intervals)
            .map(|(n, iv)| IntervalView::new(n, iv))
            .collect(),
    })
}

async fn predict(
    State(store): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> AppResult<Json<PredictResponse>> {
    let req: PredictRequest = serde_json::from_slice(&body).map_err(|e| AppError::json("request body", e))?;
    Ok(Json(blocking(move || predict_record(&store.get(&id)?, &req)).await?))
}

pub fn serve(host: &str, port: u16, data_dir: PathBuf) -> AppResult<()> {
    let store = Store::open(data_dir)?;
    let addr = format!("{host}:{port}");
    let rt = tokio::runtime::Runtime::new().map_err(|e| AppError::io("<runtime>", e))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| AppError::io(&addr, e))?;
        eprintln!(
            "survconf listening on http://{addr} (models in {})",
            store.dir().display()
        );
        axum::serve(listener, router(store))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| AppError::io(&addr, e))
    })
}
