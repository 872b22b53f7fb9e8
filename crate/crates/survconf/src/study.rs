//! Parallel coverage studies and the named study presets.

use rayon::prelude::*;

use survconf_core::sim::{
    aggregate, calibrate_tau_c, run_replication, CensoringDesign, CoverageReport, FailureModel, GenerativeConfig,
    Method, StudyConfig,
};
use survconf_core::{CensoringKind, Result, WorkingModelKind};

/// Same report as [`survconf_core::sim::run_study`], with replications spread
/// over the rayon pool.
pub fn run_study_parallel(study: &StudyConfig) -> Result<CoverageReport> {
    study.generative.validate()?;
    let tau_c = calibrate_tau_c(&study.generative, study.tau_stream())?;
    let results = (0..study.generative.n_reps)
        .into_par_iter()
        .map(|rep| run_replication(study, tau_c, rep))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(study, tau_c, &results))
}

/// Censoring used by the covariate-dependent presets: Cox-form censoring
/// driven by the binary `x1` and the uniform `x2`.
pub fn covariate_censoring() -> CensoringDesign {
    CensoringDesign::CovariateCox {
        gamma: vec![2.0, 0.5, 0.0, 0.0],
        shape: 1.0,
    }
}

fn conformal_pair(kind: WorkingModelKind) -> Vec<Method> {
    [CensoringKind::Marginal, CensoringKind::Regression]
        .into_iter()
        .map(|censoring_kind| Method::Conformal {
            working_model: kind,
            censoring_kind,
        })
        .collect()
}

pub const PRESETS: [&str; 4] = ["weibull-15", "lognormal-50", "covariate-weibull", "covariate-lognormal"];

/// Desk-scale study configurations.
///
/// - `weibull-15`, `lognormal-50`: the seven-method comparison under uniform
///   censoring at 15% / 50%.
/// - `covariate-weibull`, `covariate-lognormal`: conformal intervals with
///   marginal versus regression censoring weights, 30% covariate-dependent
///   censoring.
pub fn preset(name: &str) -> Option<StudyConfig> {
    let base = GenerativeConfig::default();
    let (generative, methods) = match name {
        "weibull-15" => (base, Method::table_methods(CensoringKind::Marginal)),
        "lognormal-50" => (
            GenerativeConfig {
                failure: FailureModel::default_lognormal(),
                target_censoring_rate: 0.5,
                ..base
            },
            Method::table_methods(CensoringKind::Marginal),
        ),
        "covariate-weibull" | "covariate-lognormal" => {
            let failure = if name == "covariate-weibull" {
                FailureModel::default_weibull()
            } else {
                FailureModel::default_lognormal()
            };
            let mut methods = conformal_pair(WorkingModelKind::Lognormal);
            methods.extend(conformal_pair(WorkingModelKind::Weibull));
            (
                GenerativeConfig {
                    failure,
                    censoring: covariate_censoring(),
                    target_censoring_rate: 0.3,
                    ..base
                },
                methods,
            )
        }
        _ => return None,
    };
    Some(StudyConfig {
        generative,
        methods,
        alpha: 0.1,
        b: 2000,
        refit_per_replicate: false,
    })
}
