//! Synthetic coverage studies.
//!
//! Covariates are `X1, X3 ~ Bernoulli(0.5)`, `X2 ~ Uniform(-5, 5)` and
//! `X4 ~ Normal(0, 1)`. Failure times follow a Weibull or log-normal AFT law
//! in those covariates; censoring is uniform on `(0, tau_c)` or follows a
//! covariate-dependent Weibull hazard, with `tau_c` tuned to a target
//! censoring rate. Each replication fits every requested method on a training
//! sample and scores its intervals on an independent test sample.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::censoring::CensoringKind;
use crate::conformal::{calibrate, predict_interval, ConformalConfig, PredictionInterval, Sidedness};
use crate::curve::StepSurvivalCurve;
use crate::data::{Dataset, Observation};
use crate::diagnostics::{compensated_sum, mean_sd};
use crate::km::{km_estimate, KmTarget};
use crate::models::{dot, fit_working_model, Endpoint, WorkingModelFit, WorkingModelKind};
use crate::normal;
use crate::rng::{open_unit, RandomStream};
use crate::{Error, Result};

/// Number of draws behind each censoring-rate evaluation.
pub const TAU_C_DRAWS: usize = 100_000;

pub const COVARIATE_NAMES: [&str; 4] = ["x1", "x2", "x3", "x4"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FailureModel {
    /// `T = exp(intercept + x beta) * E^(1 / shape)`, `E ~ Exp(1)`.
    Weibull { intercept: f64, beta: Vec<f64>, shape: f64 },
    /// `log T = intercept + x beta + sigma * Z`.
    Lognormal { intercept: f64, beta: Vec<f64>, sigma: f64 },
}

impl FailureModel {
    pub fn default_weibull() -> Self {
        FailureModel::Weibull {
            intercept: 0.5,
            beta: vec![0.8, 0.2, -0.4, 0.3],
            shape: 2.0,
        }
    }

    pub fn default_lognormal() -> Self {
        FailureModel::Lognormal {
            intercept: 0.5,
            beta: vec![0.8, 0.2, -0.4, 0.3],
            sigma: 0.4,
        }
    }

    fn beta(&self) -> &[f64] {
        match self {
            FailureModel::Weibull { beta, .. } | FailureModel::Lognormal { beta, .. } => beta,
        }
    }

    /// Failure time from the uniform `u` on (0, 1).
    pub fn time(&self, x: &[f64], u: f64) -> f64 {
        match self {
            FailureModel::Weibull { intercept, beta, shape } => {
                libm::exp(intercept + dot(beta, x)) * libm::pow(-libm::log(u), 1.0 / shape)
            }
            FailureModel::Lognormal { intercept, beta, sigma } => {
                libm::exp(intercept + dot(beta, x) + sigma * normal::ppf(u))
            }
        }
    }

    /// True conditional survival `P(T > t | x)`.
    pub fn survival(&self, t: f64, x: &[f64]) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match self {
            FailureModel::Weibull { intercept, beta, shape } => {
                libm::exp(-libm::pow(t * libm::exp(-(intercept + dot(beta, x))), *shape))
            }
            FailureModel::Lognormal { intercept, beta, sigma } => {
                normal::sf((libm::log(t) - intercept - dot(beta, x)) / sigma)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CensoringDesign {
    /// `C ~ Uniform(0, tau_c)`, independent of everything else.
    Uniform,
    /// Cumulative hazard `(t / tau_c)^shape * exp(x gamma)`.
    CovariateCox { gamma: Vec<f64>, shape: f64 },
}

impl CensoringDesign {
    /// Censoring time from the uniform `u`.
    fn time(&self, tau: f64, x: &[f64], u: f64) -> f64 {
        match self {
            CensoringDesign::Uniform => tau * u,
            CensoringDesign::CovariateCox { gamma, shape } => {
                tau * libm::pow(-libm::log(u) * libm::exp(-dot(gamma, x)), 1.0 / shape)
            }
        }
    }

    /// `P(C < t | x)`.
    fn prob_before(&self, tau: f64, x: &[f64], t: f64) -> f64 {
        match self {
            CensoringDesign::Uniform => t.min(tau) / tau,
            CensoringDesign::CovariateCox { gamma, shape } => {
                -libm::expm1(-libm::pow(t / tau, *shape) * libm::exp(dot(gamma, x)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerativeConfig {
    pub failure: FailureModel,
    pub censoring: CensoringDesign,
    pub target_censoring_rate: f64,
    /// Fixed `tau_c`; when absent it is tuned to `target_censoring_rate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_c: Option<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub n_reps: usize,
    pub seed: u64,
}

impl Default for GenerativeConfig {
    fn default() -> Self {
        Self {
            failure: FailureModel::default_weibull(),
            censoring: CensoringDesign::Uniform,
            target_censoring_rate: 0.15,
            tau_c: None,
            n_train: 1000,
            n_test: 1000,
            n_reps: 200,
            seed: 2024,
        }
    }
}

impl GenerativeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.target_censoring_rate) {
            return Err(Error::InvalidInput(format!(
                "target censoring rate must lie in [0, 1), got {}",
                self.target_censoring_rate
            )));
        }
        if self.n_train == 0 || self.n_test == 0 || self.n_reps == 0 {
            return Err(Error::InvalidInput(
                "n_train, n_test and n_reps must be positive".into(),
            ));
        }
        if self.failure.beta().len() != 4 {
            return Err(Error::InvalidInput(
                "the failure model needs one coefficient per covariate (4)".into(),
            ));
        }
        match &self.failure {
            FailureModel::Weibull { shape, .. } if !(*shape > 0.0) => {
                return Err(Error::InvalidInput("Weibull shape must be positive".into()))
            }
            FailureModel::Lognormal { sigma, .. } if !(*sigma > 0.0) => {
                return Err(Error::InvalidInput("log-normal sigma must be positive".into()))
            }
            _ => {}
        }
        if let CensoringDesign::CovariateCox { gamma, shape } = &self.censoring {
            if gamma.len() != 4 || !(*shape > 0.0) {
                return Err(Error::InvalidInput(
                    "covariate censoring needs 4 coefficients and a positive shape".into(),
                ));
            }
        }
        if let Some(t) = self.tau_c {
            if !(t > 0.0) {
                return Err(Error::InvalidInput("tau_c must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Scale of the censoring distribution; `Infinite` means no censoring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum TauC {
    Finite(f64),
    Infinite,
}

pub fn draw_covariates<R: Rng + ?Sized>(rng: &mut R) -> Vec<f64> {
    let x1 = if open_unit(rng) < 0.5 { 1.0 } else { 0.0 };
    let x2 = -5.0 + 10.0 * open_unit(rng);
    let x3 = if open_unit(rng) < 0.5 { 1.0 } else { 0.0 };
    let x4 = normal::ppf(open_unit(rng));
    vec![x1, x2, x3, x4]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedData {
    pub train: Dataset,
    pub test_covariates: Vec<Vec<f64>>,
    /// Latent failure times of the test rows.
    pub test_times: Vec<f64>,
}

pub fn generate(cfg: &GenerativeConfig, tau_c: TauC, stream: RandomStream) -> Result<SimulatedData> {
    let mut rng = stream.rng();
    let mut rows = Vec::with_capacity(cfg.n_train);
    for _ in 0..cfg.n_train {
        let x = draw_covariates(&mut rng);
        let t = cfg.failure.time(&x, open_unit(&mut rng));
        let u_c = open_unit(&mut rng);
        let c = match tau_c {
            TauC::Finite(tau) => cfg.censoring.time(tau, &x, u_c),
            TauC::Infinite => f64::INFINITY,
        };
        rows.push(Observation::new(t.min(c), t <= c, x));
    }
    let names = COVARIATE_NAMES.iter().map(|s| String::from(*s)).collect();
    let train = Dataset::new(rows, names)?;
    let mut test_covariates = Vec::with_capacity(cfg.n_test);
    let mut test_times = Vec::with_capacity(cfg.n_test);
    for _ in 0..cfg.n_test {
        let x = draw_covariates(&mut rng);
        test_times.push(cfg.failure.time(&x, open_unit(&mut rng)));
        test_covariates.push(x);
    }
    Ok(SimulatedData {
        train,
        test_covariates,
        test_times,
    })
}

/// Draws `(x, T)` pairs for censoring-rate evaluation. The failure-time
/// uniforms are stratified, which removes most of the Monte Carlo noise from
/// the rate as a function of `tau_c`.
fn rate_sample(cfg: &GenerativeConfig, stream: RandomStream, n: usize) -> Vec<(Vec<f64>, f64)> {
    let mut rng = stream.rng();
    let mut strata: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(strata.as_mut_slice(), &mut rng);
    strata
        .into_iter()
        .map(|k| {
            let x = draw_covariates(&mut rng);
            let u = (k as f64 + open_unit(&mut rng)) / n as f64;
            let t = cfg.failure.time(&x, u);
            (x, t)
        })
        .collect()
}

fn censoring_rate(design: &CensoringDesign, sample: &[(Vec<f64>, f64)], tau: f64) -> f64 {
    compensated_sum(sample.iter().map(|(x, t)| design.prob_before(tau, x, *t))) / sample.len() as f64
}

/// Tunes `tau_c` so the marginal censoring probability `P(C < T)` hits the
/// target, by bisection in `log tau_c` on a fixed sample of `(x, T)`.
pub fn calibrate_tau_c(cfg: &GenerativeConfig, stream: RandomStream) -> Result<TauC> {
    let target = cfg.target_censoring_rate;
    if let Some(t) = cfg.tau_c {
        return Ok(TauC::Finite(t));
    }
    if target == 0.0 {
        return Ok(TauC::Infinite);
    }
    let fail = |reason: &str| Error::CalibrationFailed {
        target,
        reason: reason.into(),
    };
    if !(target > 0.0 && target < 1.0) {
        return Err(fail("the rate must lie in [0, 1)"));
    }
    let sample = rate_sample(cfg, stream, TAU_C_DRAWS);
    let rate = |tau: f64| censoring_rate(&cfg.censoring, &sample, tau);

    let mut times: Vec<f64> = sample.iter().map(|s| s.1).collect();
    times.sort_by(f64::total_cmp);
    let median = times[times.len() / 2];
    let (mut lo, mut hi) = (median, median);
    let mut steps = 0;
    while rate(lo) < target {
        lo *= 0.5;
        steps += 1;
        if steps > 200 {
            return Err(fail("no tau_c gives that much censoring"));
        }
    }
    while rate(hi) > target {
        hi *= 2.0;
        steps += 1;
        if steps > 400 {
            return Err(fail("no tau_c gives that little censoring"));
        }
    }
    for _ in 0..200 {
        let mid = libm::sqrt(lo * hi);
        if rate(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-13 {
            break;
        }
    }
    let tau = libm::sqrt(lo * hi);
    if (rate(tau) - target).abs() > 0.005 {
        return Err(fail("the censoring rate jumps over the target"));
    }
    Ok(TauC::Finite(tau))
}

/// Plug-in interval from the fitted model's own quantiles:
/// `[S^-1(1 - alpha/2 | x), S^-1(alpha/2 | x)]`, or `[S^-1(1 - alpha | x), inf)`.
pub fn conditional_interval(
    fit: &WorkingModelFit,
    x: &[f64],
    alpha: f64,
    sidedness: Sidedness,
) -> Result<PredictionInterval> {
    let (lo, hi) = match sidedness {
        Sidedness::TwoSided => (
            fit.inverse_survival(1.0 - alpha / 2.0, x)?,
            fit.inverse_survival(alpha / 2.0, x)?,
        ),
        Sidedness::LowerOnly => (fit.inverse_survival(1.0 - alpha, x)?, Endpoint::Unbounded),
    };
    Ok(PredictionInterval {
        lower: lo.value(),
        upper: hi,
        alpha,
        sidedness,
        conditioning_time: 0.0,
        truncated: false,
    })
}

/// `[F_KM^-1(alpha/2), F_KM^-1(1 - alpha/2)]`, the same for every `x`. An
/// upper quantile the curve never reaches is capped at its last jump.
pub fn km_marginal_interval(curve: &StepSurvivalCurve, alpha: f64) -> PredictionInterval {
    let last = curve.last_time().unwrap_or(0.0);
    let lower = curve.inverse(1.0 - alpha / 2.0).unwrap_or(last);
    let upper = match curve.inverse(alpha / 2.0) {
        Some(t) => Endpoint::Finite(t),
        None => Endpoint::Capped(last),
    };
    PredictionInterval {
        lower,
        upper,
        alpha,
        sidedness: Sidedness::TwoSided,
        conditioning_time: 0.0,
        truncated: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Conformal {
        working_model: WorkingModelKind,
        censoring_kind: CensoringKind,
    },
    Conditional {
        working_model: WorkingModelKind,
    },
    KaplanMeier,
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Conformal {
                working_model,
                censoring_kind,
            } => match censoring_kind {
                CensoringKind::Marginal => format!("CPI-{}", working_model.label()),
                other => format!("CPI-{} ({} G)", working_model.label(), other.name()),
            },
            Method::Conditional { working_model } => String::from(working_model.label()),
            Method::KaplanMeier => String::from("K-M"),
        }
    }

    /// The seven methods of the comparison table, conformal first.
    pub fn table_methods(censoring_kind: CensoringKind) -> Vec<Method> {
        let mut out: Vec<Method> = WorkingModelKind::ALL
            .iter()
            .map(|&working_model| Method::Conformal {
                working_model,
                censoring_kind,
            })
            .collect();
        out.extend(
            WorkingModelKind::ALL
                .iter()
                .map(|&working_model| Method::Conditional { working_model }),
        );
        out.push(Method::KaplanMeier);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub generative: GenerativeConfig,
    pub methods: Vec<Method>,
    pub alpha: f64,
    #[serde(rename = "B", alias = "b")]
    pub b: usize,
    #[serde(default)]
    pub refit_per_replicate: bool,
}

impl StudyConfig {
    pub fn conformal_config(&self, working_model: WorkingModelKind, censoring_kind: CensoringKind) -> ConformalConfig {
        ConformalConfig {
            alpha: self.alpha,
            b: self.b,
            sidedness: Sidedness::TwoSided,
            truncate_at_eta: false,
            refit_per_replicate: self.refit_per_replicate,
            working_model,
            censoring_kind,
        }
    }

    /// Stream for the `tau_c` tuning sample.
    pub fn tau_stream(&self) -> RandomStream {
        RandomStream::new(self.generative.seed, u64::MAX)
    }

    /// Stream for replication `rep`.
    pub fn rep_stream(&self, rep: usize) -> RandomStream {
        RandomStream::new(self.generative.seed, 0).substream(rep as u64)
    }
}

/// Per-method scores of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    /// Fraction of test rows with `T` inside the interval.
    pub coverage: f64,
    /// Fraction with `min(T, eta)` inside the interval truncated at `eta`.
    pub coverage_min_eta: f64,
    pub mean_length: f64,
    pub mean_length_truncated: f64,
    /// Fraction of intervals whose upper end was capped at `eta`.
    pub capped_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Ok(MethodOutcome),
    Failed { code: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub rep: usize,
    pub censoring_rate: f64,
    pub eta: f64,
    pub outcomes: Vec<Outcome>,
}

/// Scores a set of intervals against latent failure times.
pub fn evaluate(intervals: &[PredictionInterval], times: &[f64], eta: f64) -> MethodOutcome {
    let n = intervals.len() as f64;
    let mut covered = 0usize;
    let mut covered_min = 0usize;
    let mut capped = 0usize;
    for (iv, &t) in intervals.iter().zip(times) {
        covered += iv.contains(t) as usize;
        covered_min += iv.truncate(eta).contains(t.min(eta)) as usize;
        capped += iv.capped() as usize;
    }
    MethodOutcome {
        coverage: covered as f64 / n,
        coverage_min_eta: covered_min as f64 / n,
        mean_length: compensated_sum(intervals.iter().map(|iv| iv.length())) / n,
        mean_length_truncated: compensated_sum(intervals.iter().map(|iv| iv.truncate(eta).length())) / n,
        capped_fraction: capped as f64 / n,
    }
}

fn run_method(study: &StudyConfig, method: Method, sim: &SimulatedData, stream: RandomStream) -> Result<MethodOutcome> {
    let eta = sim.train.eta();
    let intervals: Vec<PredictionInterval> = match method {
        Method::Conformal {
            working_model,
            censoring_kind,
        } => {
            let cfg = study.conformal_config(working_model, censoring_kind);
            let cal = calibrate(&sim.train, &cfg, stream)?;
            sim.test_covariates
                .iter()
                .map(|x| predict_interval(&cal, x, &cfg))
                .collect::<Result<_>>()?
        }
        Method::Conditional { working_model } => {
            let fit = fit_working_model(&sim.train, working_model)?;
            sim.test_covariates
                .iter()
                .map(|x| conditional_interval(&fit, x, study.alpha, Sidedness::TwoSided))
                .collect::<Result<_>>()?
        }
        Method::KaplanMeier => {
            let iv = km_marginal_interval(&km_estimate(&sim.train, KmTarget::Failure)?, study.alpha);
            vec![iv; sim.test_times.len()]
        }
    };
    Ok(evaluate(&intervals, &sim.test_times, eta))
}

/// One replication: generate data, then fit and score every method.
pub fn run_replication(study: &StudyConfig, tau_c: TauC, rep: usize) -> Result<ReplicationResult> {
    let stream = study.rep_stream(rep);
    let sim = generate(&study.generative, tau_c, stream.substream(0))?;
    let outcomes = study
        .methods
        .iter()
        .enumerate()
        .map(
            |(m, &method)| match run_method(study, method, &sim, stream.substream(1 + m as u64)) {
                Ok(o) => Outcome::Ok(o),
                Err(e) => Outcome::Failed {
                    code: e.code().into(),
                    message: format!("{e}"),
                },
            },
        )
        .collect();
    Ok(ReplicationResult {
        rep,
        censoring_rate: sim.train.censoring_rate(),
        eta: sim.train.eta(),
        outcomes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub label: String,
    pub method: Method,
    pub coverage: f64,
    pub coverage_min_eta: f64,
    pub mean_length: f64,
    /// Standard deviation across replications of the per-replication mean
    /// length.
    pub sd_length: f64,
    pub mean_length_truncated: f64,
    pub capped_fraction: f64,
    pub n_ok: usize,
    pub n_failed: usize,
    /// Per-replication mean lengths, in replication order.
    pub replicate_lengths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub config: StudyConfig,
    pub tau_c: TauC,
    pub mean_censoring_rate: f64,
    pub n_reps: usize,
    pub methods: Vec<MethodSummary>,
}

/// Combines replication results (in any order) into a report.
pub fn aggregate(study: &StudyConfig, tau_c: TauC, results: &[ReplicationResult]) -> CoverageReport {
    let mut sorted: Vec<&ReplicationResult> = results.iter().collect();
    sorted.sort_by_key(|r| r.rep);
    let rates: Vec<f64> = sorted.iter().map(|r| r.censoring_rate).collect();
    let methods = study
        .methods
        .iter()
        .enumerate()
        .map(|(m, &method)| {
            let ok: Vec<&MethodOutcome> = sorted
                .iter()
                .filter_map(|r| match &r.outcomes[m] {
                    Outcome::Ok(o) => Some(o),
                    Outcome::Failed { .. } => None,
                })
                .collect();
            let avg = |f: fn(&MethodOutcome) -> f64| mean_sd(&ok.iter().map(|o| f(o)).collect::<Vec<_>>()).0;
            let lengths: Vec<f64> = ok.iter().map(|o| o.mean_length).collect();
            let (mean_length, sd_length) = mean_sd(&lengths);
            MethodSummary {
                label: method.label(),
                method,
                coverage: avg(|o| o.coverage),
                coverage_min_eta: avg(|o| o.coverage_min_eta),
                mean_length,
                sd_length,
                mean_length_truncated: avg(|o| o.mean_length_truncated),
                capped_fraction: avg(|o| o.capped_fraction),
                n_ok: ok.len(),
                n_failed: sorted.len() - ok.len(),
                replicate_lengths: lengths,
            }
        })
        .collect();
    CoverageReport {
        config: study.clone(),
        tau_c,
        mean_censoring_rate: mean_sd(&rates).0,
        n_reps: sorted.len(),
        methods,
    }
}

/// Sequential study; the `survconf` crate runs replications in parallel with
/// identical results.
pub fn run_study(study: &StudyConfig) -> Result<CoverageReport> {
    study.generative.validate()?;
    let tau_c = calibrate_tau_c(&study.generative, study.tau_stream())?;
    let results = (0..study.generative.n_reps)
        .map(|rep| run_replication(study, tau_c, rep))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(study, tau_c, &results))
}

/// Quantile `q` of the marginal failure-time law, by sorting `n` draws.
pub fn population_quantile(failure: &FailureModel, q: f64, n: usize, stream: RandomStream) -> f64 {
    let mut rng = stream.rng();
    let mut t: Vec<f64> = (0..n)
        .map(|_| {
            let x = draw_covariates(&mut rng);
            failure.time(&x, open_unit(&mut rng))
        })
        .collect();
    t.sort_by(f64::total_cmp);
    t[((n as f64 * q) as usize).min(n - 1)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exponential() -> GenerativeConfig {
        GenerativeConfig {
            failure: FailureModel::Weibull {
                intercept: 0.0,
                beta: vec![0.0; 4],
                shape: 1.0,
            },
            target_censoring_rate: 0.5,
            n_reps: 1,
            ..Default::default()
        }
    }

    #[test]
    fn zero_rate_is_infinite_tau() {
        let cfg = GenerativeConfig {
            target_censoring_rate: 0.0,
            ..Default::default()
        };
        assert_eq!(calibrate_tau_c(&cfg, RandomStream::new(1, 0)).unwrap(), TauC::Infinite);
        let d = generate(&cfg, TauC::Infinite, RandomStream::new(1, 1)).unwrap();
        assert_eq!(d.train.censoring_rate(), 0.0);
    }

    #[test]
    fn exponential_bisection_matches_closed_form() {
        // P(C < T) = (1 - e^-tau) / tau for T ~ Exp(1), C ~ U(0, tau).
        let f = |tau: f64| (1.0 - libm::exp(-tau)) / tau - 0.5;
        let (mut lo, mut hi) = (0.1, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let TauC::Finite(tau) = calibrate_tau_c(&exponential(), RandomStream::new(5, 0)).unwrap() else {
            panic!()
        };
        assert!((tau - lo).abs() < 1e-3, "{tau} vs {lo}");
    }

    #[test]
    fn higher_rate_needs_smaller_tau() {
        let at = |rate| {
            let cfg = GenerativeConfig {
                target_censoring_rate: rate,
                ..Default::default()
            };
            match calibrate_tau_c(&cfg, RandomStream::new(3, 0)).unwrap() {
                TauC::Finite(t) => t,
                TauC::Infinite => f64::INFINITY,
            }
        };
        assert!(at(0.15) > at(0.5));
    }

    #[test]
    fn lognormal_quantiles_for_conditional_interval() {
        let fit = WorkingModelFit {
            model: crate::models::WorkingModel::Lognormal {
                intercept: 0.0,
                beta: vec![0.0],
                sigma: 1.0,
            },
            log_likelihood: 0.0,
            iterations: 0,
            converged: true,
        };
        let iv = conditional_interval(&fit, &[0.0], 0.1, Sidedness::TwoSided).unwrap();
        assert!((iv.lower - libm::exp(-1.6448536269514722)).abs() < 1e-12);
        assert!((iv.upper_value() - libm::exp(1.6448536269514722)).abs() < 1e-12);
        let point = conditional_interval(&fit, &[0.0], 1.0, Sidedness::TwoSided).unwrap();
        assert_eq!(point.lower, point.upper_value());
    }

    #[test]
    fn km_interval_uncensored_is_empirical() {
        let rows = (1..=20).map(|i| Observation::new(i as f64, true, vec![])).collect();
        let d = Dataset::unnamed(rows).unwrap();
        let iv = km_marginal_interval(&km_estimate(&d, KmTarget::Failure).unwrap(), 0.1);
        // F(t) >= 0.05 first at t = 1, F(t) >= 0.95 first at t = 19.
        assert_eq!(iv.lower, 1.0);
        assert_eq!(iv.upper, Endpoint::Finite(19.0));
    }

    #[test]
    fn vacuous_intervals_cover_everything() {
        let iv = PredictionInterval {
            lower: 0.0,
            upper: Endpoint::Unbounded,
            alpha: 0.1,
            sidedness: Sidedness::TwoSided,
            conditioning_time: 0.0,
            truncated: false,
        };
        let out = evaluate(&[iv; 3], &[0.1, 5.0, 1e9], 4.0);
        assert_eq!(out.coverage, 1.0);
        assert_eq!(out.coverage_min_eta, 1.0);
    }
}
