//! Persisted fitted models.
//!
//! A [`ModelRecord`] freezes the calibration computed at fit time together
//! with the training data, so remaining-lifetime requests (which need a fresh
//! calibration past `c_L`) can be answered later from the record alone.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use survconf_core::conformal::calibrate_remaining;
use survconf_core::models::WorkingModelFit;
use survconf_core::{
    calibrate, predict_interval, CensoringKind, ConformalCalibration, ConformalConfig, Dataset, PredictionInterval,
    RandomStream, Sidedness, WorkingModelKind,
};

use crate::error::{AppError, AppResult};

pub const DEFAULT_SEED: u64 = 2024;

/// Fit settings as they appear in a JSON config file; every field is
/// optional and unknown fields are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, rename = "B", alias = "b", skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub working_model: Option<WorkingModelKind>,
    #[serde(default, alias = "censoring_kind", skip_serializing_if = "Option::is_none")]
    pub censoring: Option<CensoringKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sidedness: Option<Sidedness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncate_at_eta: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refit_per_replicate: Option<bool>,
}

impl FitSettings {
    pub fn from_json(text: &str) -> AppResult<Self> {
        serde_json::from_str(text).map_err(|e| AppError::Config(e.to_string()))
    }

    /// Fields set in `over` win.
    pub fn overlay(self, over: FitSettings) -> FitSettings {
        FitSettings {
            seed: over.seed.or(self.seed),
            alpha: over.alpha.or(self.alpha),
            b: over.b.or(self.b),
            working_model: over.working_model.or(self.working_model),
            censoring: over.censoring.or(self.censoring),
            sidedness: over.sidedness.or(self.sidedness),
            truncate_at_eta: over.truncate_at_eta.or(self.truncate_at_eta),
            refit_per_replicate: over.refit_per_replicate.or(self.refit_per_replicate),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn conformal(&self) -> AppResult<ConformalConfig> {
        let d = ConformalConfig::default();
        let cfg = ConformalConfig {
            alpha: self.alpha.unwrap_or(d.alpha),
            b: self.b.unwrap_or(d.b),
            sidedness: self.sidedness.unwrap_or(d.sidedness),
            truncate_at_eta: self.truncate_at_eta.unwrap_or(d.truncate_at_eta),
            refit_per_replicate: self.refit_per_replicate.unwrap_or(d.refit_per_replicate),
            working_model: self.working_model.unwrap_or(d.working_model),
            censoring_kind: self.censoring.unwrap_or(d.censoring_kind),
        };
        cfg.validate().map_err(|e| AppError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub id: String,
    /// Unix seconds; set by the service, absent for CLI fits so model files
    /// stay byte-identical across runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<u64>,
    pub seed: u64,
    pub config: ConformalConfig,
    pub covariate_names: Vec<String>,
    pub n_rows: usize,
    pub n_events: usize,
    pub censoring_rate: f64,
    pub eta: f64,
    pub calibration: ConformalCalibration,
    pub training: Dataset,
}

/// Listing entry; never includes training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub id: String,
    /// Unix seconds; set by the service, absent for CLI fits so model files
    /// stay byte-identical across runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<u64>,
    pub seed: u64,
    pub config: ConformalConfig,
    pub covariate_names: Vec<String>,
    pub n_rows: usize,
    pub n_events: usize,
    pub censoring_rate: f64,
    pub eta: f64,
}

/// Summary plus the frozen calibration quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDetail {
    #[serde(flatten)]
    pub summary: ModelSummary,
    pub lower_score: f64,
    pub upper_score: f64,
    pub theta_hat: WorkingModelFit,
}

/// Calibration stream of a model fitted with `seed`. Remaining-lifetime
/// recalibration uses the same stream, so `c_L = 0` reproduces the stored
/// calibration exactly.
pub fn calibration_stream(seed: u64) -> RandomStream {
    RandomStream::new(seed, 0)
}

/// Content-derived identifier: the same data, config and seed give the same id.
pub fn model_id(data: &Dataset, config: &ConformalConfig, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(data).expect("dataset serializes"));
    h.update(serde_json::to_vec(config).expect("config serializes"));
    h.update(seed.to_le_bytes());
    hex::encode(&h.finalize()[..8])
}

impl ModelRecord {
    pub fn fit(data: Dataset, config: ConformalConfig, seed: u64) -> AppResult<Self> {
        let calibration = calibrate(&data, &config, calibration_stream(seed))?;
        Ok(Self {
            id: model_id(&data, &config, seed),
            created_at: None,
            seed,
            covariate_names: data.covariate_names().to_vec(),
            n_rows: data.len(),
            n_events: data.n_events(),
            censoring_rate: data.censoring_rate(),
            eta: data.eta(),
            config,
            calibration,
            training: data,
        })
    }

    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            id: self.id.clone(),
            created_at: self.created_at,
            seed: self.seed,
            config: self.config.clone(),
            covariate_names: self.covariate_names.clone(),
            n_rows: self.n_rows,
            n_events: self.n_events,
            censoring_rate: self.censoring_rate,
            eta: self.eta,
        }
    }

    pub fn detail(&self) -> ModelDetail {
        ModelDetail {
            summary: self.summary(),
            lower_score: self.calibration.lower_score,
            upper_score: self.calibration.upper_score,
            theta_hat: self.calibration.theta_hat.clone(),
        }
    }

    /// Config for a request: the stored config with optional overrides.
    pub fn request_config(
        &self,
        alpha: Option<f64>,
        sidedness: Option<Sidedness>,
        truncate: Option<bool>,
    ) -> AppResult<ConformalConfig> {
        let mut cfg = self.config.clone();
        if let Some(a) = alpha {
            cfg.alpha = a;
        }
        if let Some(s) = sidedness {
            cfg.sidedness = s;
        }
        if let Some(t) = truncate {
            cfg.truncate_at_eta = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Intervals for several profiles. `c_l > 0` recalibrates once on the
    /// stored training data.
    pub fn predict_many(&self, xs: &[Vec<f64>], cfg: &ConformalConfig, c_l: f64) -> AppResult<Vec<PredictionInterval>> {
        if !(c_l >= 0.0 && c_l.is_finite()) {
            return Err(AppError::BadRequest(format!(
                "c_L must be a finite nonnegative time, got {c_l}"
            )));
        }
        let remaining;
        let cal = if c_l > 0.0 {
            remaining = calibrate_remaining(&self.training, c_l, cfg, calibration_stream(self.seed))?;
            &remaining
        } else {
            &self.calibration
        };
        Ok(xs
            .iter()
            .map(|x| predict_interval(cal, x, cfg))
            .collect::<Result<Vec<_>, _>>()?)
    }

    /// Orders a name-to-value map by the model's covariates; missing or
    /// unknown names are errors.
    pub fn profile(&self, values: &BTreeMap<String, f64>) -> AppResult<Vec<f64>> {
        if let Some(k) = values.keys().find(|k| !self.covariate_names.contains(k)) {
            return Err(AppError::BadRequest(format!("unknown covariate '{k}'")));
        }
        self.covariate_names
            .iter()
            .map(|n| {
                values
                    .get(n)
                    .copied()
                    .ok_or_else(|| AppError::BadRequest(format!("missing covariate '{n}'")))
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> AppResult<()> {
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, self.to_json()).map_err(|e| AppError::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| AppError::io(path, e))
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| AppError::json(path.display().to_string(), e))
    }
}
