//! Bootstrap conformal calibration and interval construction.
//!
//! Scores are `U = S(T | X; theta*)` for pairs drawn from the IPCW joint sample
//! of the training data, where `theta*` is the working model refitted on a
//! bootstrap resample. Order statistics `L <= R` of the scores are mapped back
//! to the time axis through the generalized inverse of the working model
//! fitted on the original data, `[S^-1(R | x), S^-1(L | x)]`.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::censoring::{fit_censoring_model, CensoringKind, CensoringModel};
use crate::data::Dataset;
use crate::diagnostics::mean_sd;
use crate::ipcw::{ipcw_joint_sample, sample_pair, WeightedPairSample};
use crate::models::{fit_working_model, WorkingModelFit, WorkingModelKind};
use crate::rng::RandomStream;
use crate::{Error, Result};

pub use crate::models::Endpoint;

/// Minimum number of uncensored rows past `c_L` for remaining-lifetime
/// calibration.
pub const MIN_REMAINING_SUPPORT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    TwoSided,
    LowerOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConformalConfig {
    pub alpha: f64,
    #[serde(rename = "B", alias = "b")]
    pub b: usize,
    pub sidedness: Sidedness,
    pub truncate_at_eta: bool,
    /// Refit the working model on a fresh bootstrap resample for every score
    /// instead of once.
    pub refit_per_replicate: bool,
    pub working_model: WorkingModelKind,
    pub censoring_kind: CensoringKind,
}

impl Default for ConformalConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            b: 2000,
            sidedness: Sidedness::TwoSided,
            truncate_at_eta: false,
            refit_per_replicate: false,
            working_model: WorkingModelKind::Cox,
            censoring_kind: CensoringKind::Marginal,
        }
    }
}

impl ConformalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.b < 100 {
            return Err(Error::InvalidInput(format!("B must be at least 100, got {}", self.b)));
        }
        quantile_positions(self.b, self.alpha, self.sidedness).map(|_| ())
    }
}

/// `[x]`-th order statistic positions (1-based) for `(L, R)`; `L` is `None`
/// for lower-only intervals.
fn quantile_positions(b: usize, alpha: f64, sidedness: Sidedness) -> Result<(Option<usize>, usize)> {
    // The small slack keeps e.g. 2000 * 0.1 / 2 from flooring to 99.
    let pos = |q: f64| libm::floor(b as f64 * q + 1e-9) as usize;
    match sidedness {
        Sidedness::TwoSided => {
            let l = pos(alpha / 2.0);
            if l < 1 {
                return Err(Error::InvalidInput(format!(
                    "B * alpha / 2 must be at least 1 (B = {b}, alpha = {alpha})"
                )));
            }
            Ok((Some(l), pos(1.0 - alpha / 2.0).clamp(l, b)))
        }
        Sidedness::LowerOnly => {
            let r = pos(1.0 - alpha);
            if r < 1 {
                return Err(Error::InvalidInput(format!(
                    "B * (1 - alpha) must be at least 1 (B = {b}, alpha = {alpha})"
                )));
            }
            Ok((None, r.min(b)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalCalibration {
    /// Lower score quantile `L` (0 for lower-only calibrations).
    pub lower_score: f64,
    /// Upper score quantile `R` (`R'` for lower-only calibrations).
    pub upper_score: f64,
    /// The `B` scores, sorted ascending.
    pub scores: Vec<f64>,
    pub theta_hat: WorkingModelFit,
    /// Bootstrap refit used for the scores (the last one when refitting per
    /// replicate).
    pub theta_star: WorkingModelFit,
    /// Largest observed failure time of the training data.
    pub eta: f64,
    /// Scores are conditional-survival ratios past this time when positive.
    pub conditioning_time: f64,
    pub alpha: f64,
    pub sidedness: Sidedness,
}

impl ConformalCalibration {
    /// `(L, R)` recomputed from the stored scores at another level.
    pub fn quantiles(&self, alpha: f64, sidedness: Sidedness) -> Result<(f64, f64)> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidInput(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        let (l, r) = quantile_positions(self.scores.len(), alpha, sidedness)?;
        Ok((l.map_or(0.0, |l| self.scores[l - 1]), self.scores[r - 1]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: Endpoint,
    pub alpha: f64,
    pub sidedness: Sidedness,
    /// Elapsed survival time conditioned on (0 if none).
    pub conditioning_time: f64,
    /// True when the interval targets `min(T, eta)`.
    pub truncated: bool,
}

impl PredictionInterval {
    pub fn upper_value(&self) -> f64 {
        self.upper.value()
    }

    pub fn capped(&self) -> bool {
        self.upper.is_capped()
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lower <= t && t <= self.upper_value()
    }

    pub fn length(&self) -> f64 {
        self.upper_value() - self.lower
    }

    /// The image of the interval under `t -> min(t, eta)`, a prediction for
    /// `min(T, eta)`. A lower end past `eta` collapses onto `eta`.
    pub fn truncate(mut self, eta: f64) -> Self {
        self.lower = self.lower.min(eta);
        self.upper = Endpoint::Finite(self.upper_value().min(eta));
        self.truncated = true;
        self
    }
}

enum PairLaw {
    Ipcw(CensoringKind),
    UniformUncensored,
}

/// Algorithm 1 with the scores drawn from the IPCW joint sample.
pub fn calibrate(data: &Dataset, cfg: &ConformalConfig, stream: RandomStream) -> Result<ConformalCalibration> {
    calibrate_with(data, cfg, stream, 0.0, PairLaw::Ipcw(cfg.censoring_kind))
}

/// Calibration for the remaining lifetime past `c_l`: pairs with `T <= c_l`
/// are rejected and scores become `S(T | X) / S(c_l | X)`.
pub fn calibrate_remaining(
    data: &Dataset,
    c_l: f64,
    cfg: &ConformalConfig,
    stream: RandomStream,
) -> Result<ConformalCalibration> {
    if !(c_l >= 0.0 && c_l.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "c_L must be a finite nonnegative time, got {c_l}"
        )));
    }
    calibrate_with(data, cfg, stream, c_l, PairLaw::Ipcw(cfg.censoring_kind))
}

fn calibrate_with(
    data: &Dataset,
    cfg: &ConformalConfig,
    stream: RandomStream,
    c_l: f64,
    law: PairLaw,
) -> Result<ConformalCalibration> {
    cfg.validate()?;
    let theta_hat = fit_working_model(data, cfg.working_model)?;
    let sample = match law {
        PairLaw::Ipcw(kind) => ipcw_joint_sample(data, &fit_censoring_model(data, kind)?)?,
        PairLaw::UniformUncensored => WeightedPairSample::uniform_uncensored(data)?,
    };
    if c_l > 0.0 {
        let found = sample.entries().iter().filter(|e| e.time > c_l).count();
        if found < MIN_REMAINING_SUPPORT {
            return Err(Error::InsufficientSupport {
                c_l,
                found,
                required: MIN_REMAINING_SUPPORT,
            });
        }
    }

    let score = |fit: &WorkingModelFit, rng: &mut rand_chacha::ChaCha8Rng| loop {
        let pair = sample_pair(&sample, rng);
        if pair.time <= c_l {
            continue;
        }
        let s = fit.survival(pair.time, &pair.covariates);
        if c_l > 0.0 {
            let denom = fit.survival(c_l, &pair.covariates);
            break if denom > 0.0 { (s / denom).min(1.0) } else { 0.0 };
        }
        break s;
    };

    let mut scores = Vec::with_capacity(cfg.b);
    let theta_star = if cfg.refit_per_replicate {
        let mut last = None;
        for b in 0..cfg.b {
            let mut rng = stream.substream(b as u64).rng();
            let star = fit_working_model(&data.bootstrap(&mut rng)?, cfg.working_model)?;
            scores.push(score(&star, &mut rng));
            last = Some(star);
        }
        last.expect("B >= 100")
    } else {
        let mut rng = stream.rng();
        let star = fit_working_model(&data.bootstrap(&mut rng)?, cfg.working_model)?;
        for _ in 0..cfg.b {
            scores.push(score(&star, &mut rng));
        }
        star
    };
    scores.sort_by(f64::total_cmp);

    let mut cal = ConformalCalibration {
        lower_score: 0.0,
        upper_score: 0.0,
        scores,
        theta_hat,
        theta_star,
        eta: data.eta(),
        conditioning_time: c_l,
        alpha: cfg.alpha,
        sidedness: cfg.sidedness,
    };
    (cal.lower_score, cal.upper_score) = cal.quantiles(cfg.alpha, cfg.sidedness)?;
    Ok(cal)
}

/// Interval for a new covariate vector at the level and sidedness of `cfg`.
pub fn predict_interval(
    cal: &ConformalCalibration,
    x_new: &[f64],
    cfg: &ConformalConfig,
) -> Result<PredictionInterval> {
    let fit = &cal.theta_hat;
    if x_new.len() != fit.n_covariates() {
        return Err(Error::InvalidInput(format!(
            "expected {} covariates, got {}",
            fit.n_covariates(),
            x_new.len()
        )));
    }
    let (l, r) = cal.quantiles(cfg.alpha, cfg.sidedness)?;
    let c = cal.conditioning_time;
    let scale = if c > 0.0 { fit.survival(c, x_new) } else { 1.0 };
    let invert = |u: f64| -> Result<Endpoint> {
        if u <= 0.0 {
            return Ok(match fit.eta() {
                Some(eta) => Endpoint::Capped(eta),
                None => Endpoint::Unbounded,
            });
        }
        fit.inverse_survival(u.min(1.0), x_new)
    };
    let (lo, hi) = match cfg.sidedness {
        Sidedness::TwoSided => (invert(scale * r)?, invert(scale * l)?),
        Sidedness::LowerOnly => (invert(scale * r)?, Endpoint::Unbounded),
    };
    let mut lower = lo.value();
    if c > 0.0 {
        lower = lower.max(c);
    }
    let interval = PredictionInterval {
        lower,
        upper: hi,
        alpha: cfg.alpha,
        sidedness: cfg.sidedness,
        conditioning_time: c,
        truncated: false,
    };
    Ok(if cfg.truncate_at_eta {
        interval.truncate(cal.eta)
    } else {
        interval
    })
}

/// Prediction interval for `T` given `T > c_l`.
pub fn remaining_lifetime_interval(
    data: &Dataset,
    c_l: f64,
    x_new: &[f64],
    cfg: &ConformalConfig,
    stream: RandomStream,
) -> Result<PredictionInterval> {
    let cal = calibrate_remaining(data, c_l, cfg, stream)?;
    predict_interval(&cal, x_new, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub coverages: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

impl SplitSummary {
    pub fn from_coverages(coverages: Vec<f64>) -> Self {
        let (mean, sd) = mean_sd(&coverages);
        Self { coverages, mean, sd }
    }
}

/// One train/test split: calibrate on the training fold with scores drawn
/// uniformly from its uncensored rows, then report the fraction of uncensored
/// testing rows whose failure time falls inside its interval.
pub fn split_once(data: &Dataset, cfg: &ConformalConfig, split_fraction: f64, stream: RandomStream) -> Result<f64> {
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::InvalidSplit(format!(
            "split fraction must lie in (0, 1), got {split_fraction}"
        )));
    }
    let n = data.len();
    let n_train = libm::round(n as f64 * split_fraction) as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::InvalidSplit(format!(
            "a {split_fraction} split of {n} rows leaves an empty fold"
        )));
    }
    let mut rng = stream.rng();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let (train_idx, test_idx) = idx.split_at(n_train);
    if !train_idx.iter().any(|&i| data.rows()[i].event) {
        return Err(Error::InvalidSplit("training fold has no events".into()));
    }
    let test: Vec<usize> = test_idx.iter().copied().filter(|&i| data.rows()[i].event).collect();
    if test.is_empty() {
        return Err(Error::InvalidSplit("testing fold has no uncensored rows".into()));
    }
    let train = data.subset(train_idx)?;
    let cal = calibrate_with(&train, cfg, stream.substream(0), 0.0, PairLaw::UniformUncensored)?;
    let mut covered = 0usize;
    for &i in &test {
        let row = &data.rows()[i];
        let iv = predict_interval(&cal, &row.covariates, cfg)?;
        let t = if cfg.truncate_at_eta {
            row.time.min(cal.eta)
        } else {
            row.time
        };
        if iv.contains(t) {
            covered += 1;
        }
    }
    Ok(covered as f64 / test.len() as f64)
}

pub fn split_validate(
    data: &Dataset,
    cfg: &ConformalConfig,
    n_splits: usize,
    split_fraction: f64,
    stream: RandomStream,
) -> Result<SplitSummary> {
    if n_splits == 0 {
        return Err(Error::InvalidSplit("need at least one split".into()));
    }
    let coverages = (0..n_splits)
        .map(|s| split_once(data, cfg, split_fraction, stream.substream(s as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SplitSummary::from_coverages(coverages))
}

/// `psi(u) = sum_i p_i I(S(T_i | X_i) <= u)` over the IPCW joint sample.
pub fn shift_diagnostic(data: &Dataset, fit: &WorkingModelFit, cm: &CensoringModel, grid: &[f64]) -> Result<Vec<f64>> {
    let sample = ipcw_joint_sample(data, cm)?;
    let mut pit: Vec<(f64, f64)> = sample
        .entries()
        .iter()
        .zip(sample.probabilities())
        .map(|(e, &p)| (fit.survival(e.time, &e.covariates), p))
        .collect();
    pit.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cum = Vec::with_capacity(pit.len());
    let mut acc = 0.0;
    for &(_, p) in &pit {
        acc += p;
        cum.push(acc);
    }
    Ok(grid
        .iter()
        .map(|&u| {
            let k = pit.partition_point(|&(s, _)| s <= u);
            if k == 0 {
                0.0
            } else if k == pit.len() {
                1.0
            } else {
                cum[k - 1]
            }
        })
        .collect())
}
