//! Working regression models for the conformal score `S(T | X; theta)`.
//!
//! Three interchangeable fits are provided: Cox proportional hazards with a
//! Breslow baseline, and Weibull / log-normal accelerated failure time models
//! fitted by censored maximum likelihood. The parametric models carry an
//! intercept; the Cox model does not (the baseline absorbs it).

mod aft;
mod cox;

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::normal;
use crate::{Error, Result};

pub use aft::{aft_log_likelihood, AftFamily};
pub use cox::{cox_log_partial_likelihood, CumulativeHazard};
pub(crate) use cox::{fit_cox_records, CoxRecord};

/// Newton settings shared by all fits.
pub(crate) const MAX_ITER: usize = 100;
pub(crate) const MAX_HALVINGS: usize = 30;
pub(crate) const REL_TOL: f64 = 1e-8;

/// Newton stopping rule: the relative log-likelihood change is below
/// `REL_TOL` and the accepted step, in units of each parameter's data range,
/// is negligible. The second condition keeps a monotone likelihood (flat
/// towards infinity) from passing for convergence.
pub(crate) fn newton_converged(change: f64, value: f64, step: &[f64], scale: f64, ranges: &[f64]) -> bool {
    change <= REL_TOL * value.abs().max(1e-10) && step.iter().zip(ranges).all(|(s, r)| (scale * s * r).abs() <= 1e-6)
}

/// A log-likelihood with its gradient and row-major Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkingModelKind {
    Cox,
    Weibull,
    #[serde(alias = "log_normal", alias = "log-normal")]
    Lognormal,
}

impl WorkingModelKind {
    pub const ALL: [WorkingModelKind; 3] = [
        WorkingModelKind::Lognormal,
        WorkingModelKind::Weibull,
        WorkingModelKind::Cox,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WorkingModelKind::Cox => "cox",
            WorkingModelKind::Weibull => "weibull",
            WorkingModelKind::Lognormal => "lognormal",
        }
    }

    /// Display label matching the usual table headings.
    pub fn label(self) -> &'static str {
        match self {
            WorkingModelKind::Cox => "Cox",
            WorkingModelKind::Weibull => "Weibull",
            WorkingModelKind::Lognormal => "log-normal",
        }
    }
}

impl core::str::FromStr for WorkingModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cox" => Ok(Self::Cox),
            "weibull" => Ok(Self::Weibull),
            "lognormal" | "log-normal" | "log_normal" => Ok(Self::Lognormal),
            other => Err(Error::InvalidInput(format!("unknown working model '{other}'"))),
        }
    }
}

/// A fitted working model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorkingModel {
    /// `S(t|x) = exp(-Lambda0(t) exp(x beta))`; `eta` is the largest observed
    /// failure time, beyond which the baseline is not estimated.
    Cox {
        beta: Vec<f64>,
        baseline_cumhaz: CumulativeHazard,
        eta: f64,
    },
    /// `S(t|x) = exp(-(t exp(-(intercept + x beta)))^(1/b))`, `b = exp(log_scale)`.
    Weibull {
        intercept: f64,
        beta: Vec<f64>,
        log_scale: f64,
    },
    /// `log T | x ~ Normal(intercept + x beta, sigma^2)`.
    Lognormal { intercept: f64, beta: Vec<f64>, sigma: f64 },
}

/// A time-axis endpoint, possibly capped at the Cox support limit or
/// unbounded (one-sided intervals).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Endpoint {
    Finite(f64),
    /// The inverse lies beyond the largest observed failure time `eta`.
    Capped(f64),
    Unbounded,
}

impl Endpoint {
    /// Numeric value with capped endpoints read as `eta`.
    pub fn value(self) -> f64 {
        match self {
            Endpoint::Finite(t) | Endpoint::Capped(t) => t,
            Endpoint::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_capped(self) -> bool {
        matches!(self, Endpoint::Capped(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkingModelFit {
    pub model: WorkingModel,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl WorkingModelFit {
    pub fn kind(&self) -> WorkingModelKind {
        match self.model {
            WorkingModel::Cox { .. } => WorkingModelKind::Cox,
            WorkingModel::Weibull { .. } => WorkingModelKind::Weibull,
            WorkingModel::Lognormal { .. } => WorkingModelKind::Lognormal,
        }
    }

    pub fn n_covariates(&self) -> usize {
        match &self.model {
            WorkingModel::Cox { beta, .. }
            | WorkingModel::Weibull { beta, .. }
            | WorkingModel::Lognormal { beta, .. } => beta.len(),
        }
    }

    /// Support limit for the Cox model, `None` for parametric models.
    pub fn eta(&self) -> Option<f64> {
        match self.model {
            WorkingModel::Cox { eta, .. } => Some(eta),
            _ => None,
        }
    }

    /// Linear predictor `x beta` (plus intercept for the parametric models).
    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        match &self.model {
            WorkingModel::Cox { beta, .. } => dot(beta, x),
            WorkingModel::Weibull { intercept, beta, .. } | WorkingModel::Lognormal { intercept, beta, .. } => {
                intercept + dot(beta, x)
            }
        }
    }

    /// `S(t | x)`. Times at or below zero return 1.
    pub fn survival(&self, t: f64, x: &[f64]) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let lp = self.linear_predictor(x);
        match &self.model {
            WorkingModel::Cox { baseline_cumhaz, .. } => libm::exp(-baseline_cumhaz.eval(t) * libm::exp(lp)),
            WorkingModel::Weibull { log_scale, .. } => {
                let z = (libm::log(t) - lp) / libm::exp(*log_scale);
                libm::exp(-libm::exp(z))
            }
            WorkingModel::Lognormal { sigma, .. } => normal::sf((libm::log(t) - lp) / sigma),
        }
    }

    /// Generalized inverse `inf{t : S(t|x) <= u}` for `u` in (0, 1].
    ///
    /// For the Cox model the baseline is inverted as a step function; targets
    /// beyond `Lambda0(eta)` return [`Endpoint::Capped`]`(eta)`.
    pub fn inverse_survival(&self, u: f64, x: &[f64]) -> Result<Endpoint> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "survival probability must lie in (0, 1], got {u}"
            )));
        }
        if u == 1.0 {
            return Ok(Endpoint::Finite(0.0));
        }
        let lp = self.linear_predictor(x);
        Ok(match &self.model {
            WorkingModel::Cox {
                baseline_cumhaz, eta, ..
            } => {
                let target = -libm::log(u) * libm::exp(-lp);
                match baseline_cumhaz.inverse(target) {
                    Some(t) => Endpoint::Finite(t),
                    None => Endpoint::Capped(*eta),
                }
            }
            WorkingModel::Weibull { log_scale, .. } => {
                Endpoint::Finite(libm::exp(lp + libm::exp(*log_scale) * libm::log(-libm::log(u))))
            }
            WorkingModel::Lognormal { sigma, .. } => Endpoint::Finite(libm::exp(lp + sigma * normal::isf(u))),
        })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn fit_working_model(data: &Dataset, kind: WorkingModelKind) -> Result<WorkingModelFit> {
    match kind {
        WorkingModelKind::Cox => fit_cox(data),
        WorkingModelKind::Weibull => fit_weibull(data),
        WorkingModelKind::Lognormal => fit_lognormal(data),
    }
}

/// Cox model by Breslow-tie partial likelihood (Newton from zero with step
/// halving) and the Breslow baseline cumulative hazard.
pub fn fit_cox(data: &Dataset) -> Result<WorkingModelFit> {
    let records: Vec<CoxRecord<'_>> = data
        .rows()
        .iter()
        .map(|r| CoxRecord {
            time: r.time,
            exits_late: !r.event,
            is_event: r.event,
            x: &r.covariates,
        })
        .collect();
    let est = fit_cox_records(records, data.n_covariates())?;
    Ok(WorkingModelFit {
        model: WorkingModel::Cox {
            beta: est.beta,
            baseline_cumhaz: est.baseline,
            eta: data.eta(),
        },
        log_likelihood: est.log_likelihood,
        iterations: est.iterations,
        converged: true,
    })
}

pub fn fit_weibull(data: &Dataset) -> Result<WorkingModelFit> {
    aft::fit_aft(data, AftFamily::Weibull)
}

pub fn fit_lognormal(data: &Dataset) -> Result<WorkingModelFit> {
    aft::fit_aft(data, AftFamily::Lognormal)
}
