//! Right-censored observations and datasets.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One right-censored row: `time = min(T, C)`, `event = (T <= C)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: f64,
    pub event: bool,
    pub covariates: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<u32>,
}

impl Observation {
    pub fn new(time: f64, event: bool, covariates: Vec<f64>) -> Self {
        Self {
            time,
            event,
            covariates,
            site: None,
        }
    }

    pub fn with_site(mut self, site: u32) -> Self {
        self.site = Some(site);
        self
    }
}

/// A validated training corpus.
///
/// Invariants: every time is positive and finite, all covariates are finite
/// and of the same length as `covariate_names`, at least one row is an event,
/// and site labels are either on every row or on none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset", into = "RawDataset")]
pub struct Dataset {
    rows: Vec<Observation>,
    covariate_names: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawDataset {
    rows: Vec<Observation>,
    covariate_names: Vec<String>,
}

impl TryFrom<RawDataset> for Dataset {
    type Error = Error;

    fn try_from(raw: RawDataset) -> Result<Self> {
        Dataset::new(raw.rows, raw.covariate_names)
    }
}

impl From<Dataset> for RawDataset {
    fn from(d: Dataset) -> Self {
        RawDataset {
            rows: d.rows,
            covariate_names: d.covariate_names,
        }
    }
}

impl Dataset {
    pub fn new(rows: Vec<Observation>, covariate_names: Vec<String>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("dataset has no rows".into()));
        }
        let p = covariate_names.len();
        let with_site = rows[0].site.is_some();
        for (i, row) in rows.iter().enumerate() {
            if !(row.time.is_finite() && row.time > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "row {i}: time must be positive and finite, got {}",
                    row.time
                )));
            }
            if row.covariates.len() != p {
                return Err(Error::InvalidInput(format!(
                    "row {i}: expected {p} covariates, got {}",
                    row.covariates.len()
                )));
            }
            if let Some(j) = row.covariates.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("row {i}: covariate {j} is not finite")));
            }
            if row.site.is_some() != with_site {
                return Err(Error::InvalidInput(format!(
                    "row {i}: site labels must be on every row or on none"
                )));
            }
        }
        if !rows.iter().any(|r| r.event) {
            return Err(Error::InvalidInput("dataset has no events".into()));
        }
        Ok(Self { rows, covariate_names })
    }

    /// Dataset with generated covariate names `x1, x2, ...`.
    pub fn unnamed(rows: Vec<Observation>) -> Result<Self> {
        let p = rows.first().map_or(0, |r| r.covariates.len());
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        Self::new(rows, names)
    }

    pub fn rows(&self) -> &[Observation] {
        &self.rows
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn n_events(&self) -> usize {
        self.rows.iter().filter(|r| r.event).count()
    }

    pub fn censoring_rate(&self) -> f64 {
        1.0 - self.n_events() as f64 / self.len() as f64
    }

    pub fn has_sites(&self) -> bool {
        self.rows[0].site.is_some()
    }

    /// Largest observed failure time.
    pub fn eta(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.event)
            .map(|r| r.time)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rows at `indices`, in that order (repeats allowed).
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        Dataset::new(rows, self.covariate_names.clone())
    }

    /// Nonparametric bootstrap resample of the same size.
    pub fn bootstrap<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Dataset> {
        let n = self.len();
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        self.subset(&idx)
    }
}
