//! Estimates of the censoring survival function `G(t | x, site)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::curve::StepSurvivalCurve;
use crate::data::Dataset;
use crate::km::{km_estimate, product_limit, KmTarget};
use crate::models::{dot, fit_cox_records, CoxRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensoringKind {
    Marginal,
    Stratified,
    Regression,
}

impl CensoringKind {
    pub fn name(self) -> &'static str {
        match self {
            CensoringKind::Marginal => "marginal",
            CensoringKind::Stratified => "stratified",
            CensoringKind::Regression => "regression",
        }
    }
}

impl core::str::FromStr for CensoringKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "marginal" => Ok(Self::Marginal),
            "stratified" => Ok(Self::Stratified),
            "regression" => Ok(Self::Regression),
            other => Err(Error::InvalidInput(format!("unknown censoring model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CensoringModel {
    Marginal {
        curve: StepSurvivalCurve,
    },
    /// One Kaplan–Meier censoring curve per site.
    Stratified {
        curves: BTreeMap<u32, StepSurvivalCurve>,
    },
    /// Cox form `G(t | x) = baseline(t)^exp(x gamma)`, where `baseline` is
    /// `exp(-Lambda_c0(t))` from the Breslow estimate.
    Regression {
        gamma: Vec<f64>,
        baseline: StepSurvivalCurve,
    },
}

impl CensoringModel {
    pub fn kind(&self) -> CensoringKind {
        match self {
            CensoringModel::Marginal { .. } => CensoringKind::Marginal,
            CensoringModel::Stratified { .. } => CensoringKind::Stratified,
            CensoringModel::Regression { .. } => CensoringKind::Regression,
        }
    }

    /// `G(t | x, site)`.
    pub fn survival(&self, t: f64, x: &[f64], site: Option<u32>) -> Result<f64> {
        self.eval_with(x, site, |c| c.eval(t))
    }

    /// `G(t- | x, site)`, the left limit used for inverse weights.
    pub fn survival_left(&self, t: f64, x: &[f64], site: Option<u32>) -> Result<f64> {
        self.eval_with(x, site, |c| c.eval_left(t))
    }

    fn eval_with(&self, x: &[f64], site: Option<u32>, f: impl Fn(&StepSurvivalCurve) -> f64) -> Result<f64> {
        match self {
            CensoringModel::Marginal { curve } => Ok(f(curve)),
            CensoringModel::Stratified { curves } => {
                let site = site.ok_or_else(|| Error::InvalidInput("stratified censoring model needs a site".into()))?;
                let curve = curves
                    .get(&site)
                    .ok_or_else(|| Error::InvalidInput(format!("site {site} was not seen when fitting")))?;
                Ok(f(curve))
            }
            CensoringModel::Regression { gamma, baseline } => {
                if x.len() != gamma.len() {
                    return Err(Error::InvalidInput(format!(
                        "expected {} covariates, got {}",
                        gamma.len(),
                        x.len()
                    )));
                }
                let base = f(baseline);
                Ok(libm::pow(base, libm::exp(dot(gamma, x))).clamp(0.0, 1.0))
            }
        }
    }
}

pub fn fit_censoring_model(data: &Dataset, kind: CensoringKind) -> Result<CensoringModel> {
    match kind {
        CensoringKind::Marginal => Ok(CensoringModel::Marginal {
            curve: km_estimate(data, KmTarget::Censoring)?,
        }),
        CensoringKind::Stratified => {
            if !data.has_sites() {
                return Err(Error::InvalidInput(
                    "stratified censoring needs a site label on every row".into(),
                ));
            }
            let mut by_site: BTreeMap<u32, Vec<(f64, bool)>> = BTreeMap::new();
            for r in data.rows() {
                by_site
                    .entry(r.site.unwrap_or_default())
                    .or_default()
                    .push((r.time, r.event));
            }
            let mut curves = BTreeMap::new();
            for (site, rows) in by_site {
                curves.insert(site, product_limit(rows, KmTarget::Censoring)?);
            }
            Ok(CensoringModel::Stratified { curves })
        }
        CensoringKind::Regression => {
            let p = data.n_covariates();
            if data.n_events() == data.len() {
                // Nothing is censored: G is identically 1.
                return Ok(CensoringModel::Regression {
                    gamma: alloc::vec![0.0; p],
                    baseline: StepSurvivalCurve::constant_one(),
                });
            }
            let records = data
                .rows()
                .iter()
                .map(|r| CoxRecord {
                    time: r.time,
                    exits_late: !r.event,
                    is_event: !r.event,
                    x: &r.covariates,
                })
                .collect();
            let est = fit_cox_records(records, p)?;
            let baseline = StepSurvivalCurve::new(
                est.baseline.times().to_vec(),
                est.baseline.values().iter().map(|h| libm::exp(-h)).collect(),
            )?;
            Ok(CensoringModel::Regression {
                gamma: est.beta,
                baseline,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Observation;
    use alloc::vec;

    #[test]
    fn uncensored_marginal_is_one() {
        let d = Dataset::unnamed((1..5).map(|i| Observation::new(i as f64, true, vec![])).collect()).unwrap();
        let cm = fit_censoring_model(&d, CensoringKind::Marginal).unwrap();
        for t in [0.5, 1.0, 4.0, 100.0] {
            assert_eq!(cm.survival(t, &[], None).unwrap(), 1.0);
        }
    }

    #[test]
    fn stratified_decomposes() {
        let a = [(1.0, true), (2.0, false), (3.0, true)];
        let b = [(1.5, false), (2.5, true), (4.0, false), (5.0, true)];
        let mut rows = Vec::new();
        rows.extend(a.iter().map(|&(t, e)| Observation::new(t, e, vec![]).with_site(1)));
        rows.extend(b.iter().map(|&(t, e)| Observation::new(t, e, vec![]).with_site(2)));
        let d = Dataset::unnamed(rows).unwrap();
        let cm = fit_censoring_model(&d, CensoringKind::Stratified).unwrap();
        let ka = product_limit(a, KmTarget::Censoring).unwrap();
        let kb = product_limit(b, KmTarget::Censoring).unwrap();
        for t in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0] {
            assert_eq!(cm.survival(t, &[], Some(1)).unwrap(), ka.eval(t));
            assert_eq!(cm.survival(t, &[], Some(2)).unwrap(), kb.eval(t));
        }
        assert!(cm.survival(1.0, &[], Some(3)).is_err());
        assert!(cm.survival(1.0, &[], None).is_err());
    }

    #[test]
    fn site_without_censoring_is_one() {
        let rows = vec![
            Observation::new(1.0, true, vec![]).with_site(7),
            Observation::new(2.0, true, vec![]).with_site(7),
            Observation::new(1.0, false, vec![]).with_site(8),
            Observation::new(3.0, true, vec![]).with_site(8),
        ];
        let d = Dataset::unnamed(rows).unwrap();
        let cm = fit_censoring_model(&d, CensoringKind::Stratified).unwrap();
        assert_eq!(cm.survival(10.0, &[], Some(7)).unwrap(), 1.0);
        assert_eq!(cm.survival(1.0, &[], Some(8)).unwrap(), 0.5);
    }

    #[test]
    fn regression_without_covariate_effect_matches_breslow_form() {
        let d = Dataset::unnamed(
            [(1.0, true), (2.0, false), (3.0, true), (4.0, false), (5.0, true)]
                .iter()
                .map(|&(t, e)| Observation::new(t, e, vec![0.0]))
                .collect(),
        )
        .unwrap();
        let cm = fit_censoring_model(&d, CensoringKind::Regression).unwrap();
        // Breslow with no covariates: exp(-sum d/n_risk) with n_risk 4 at t=2, 2 at t=4.
        let g = cm.survival(4.0, &[0.0], None).unwrap();
        assert!((g - libm::exp(-(1.0 / 4.0 + 1.0 / 2.0))).abs() < 1e-14);
        assert_eq!(cm.survival_left(2.0, &[0.0], None).unwrap(), 1.0);
    }
}
