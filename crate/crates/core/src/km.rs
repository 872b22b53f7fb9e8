//! Kaplan–Meier product-limit estimation.
//!
//! Ties: at a time shared by failures and censorings, failures leave the risk
//! set first. Censored rows at `t` are therefore still at risk for failures at
//! `t`, while failures at `t` are no longer at risk of being censored at `t`.
//! With this ordering `S(t-) * G(t-) = n_at_risk(t) / n` holds exactly, which
//! is what makes the IPCW joint sample reproduce the KM failure curve.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::curve::StepSurvivalCurve;
use crate::data::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KmTarget {
    /// Survival of the failure time `T`.
    Failure,
    /// Survival of the censoring time `C` (event indicator complemented).
    Censoring,
}

pub fn km_estimate(data: &Dataset, target: KmTarget) -> Result<StepSurvivalCurve> {
    product_limit(data.rows().iter().map(|r| (r.time, r.event)), target)
}

/// Product-limit curve over raw `(time, event)` pairs.
pub(crate) fn product_limit<I>(rows: I, target: KmTarget) -> Result<StepSurvivalCurve>
where
    I: IntoIterator<Item = (f64, bool)>,
{
    let mut rows: Vec<(f64, bool)> = rows.into_iter().collect();
    if rows.is_empty() {
        return Err(Error::InvalidInput(
            "cannot estimate a survival curve from zero rows".into(),
        ));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));

    // S(t_j) = (r_j - d_j) / D_j with D_j = r_j / S(t_{j-1}). D is only
    // recomputed when the risk set shrank through the other event type, so an
    // uncensored sample gives exactly (n - deaths) / n.
    let mut at_risk = rows.len();
    let mut surv = 1.0;
    let mut denom = 0.0;
    let mut remaining = None;
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let t = rows[i].0;
        let mut failures = 0;
        let mut censored = 0;
        while i < rows.len() && rows[i].0 == t {
            if rows[i].1 {
                failures += 1
            } else {
                censored += 1
            }
            i += 1;
        }
        let (events, risk) = match target {
            KmTarget::Failure => (failures, at_risk),
            KmTarget::Censoring => (censored, at_risk - failures),
        };
        if events > 0 {
            if remaining != Some(risk) {
                denom = risk as f64 / surv;
            }
            surv = (risk - events) as f64 / denom;
            remaining = Some(risk - events);
            times.push(t);
            values.push(surv);
        }
        at_risk -= failures + censored;
    }
    StepSurvivalCurve::new(times, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Observation;
    use alloc::vec;

    fn data(rows: &[(f64, bool)]) -> Dataset {
        Dataset::unnamed(rows.iter().map(|&(t, e)| Observation::new(t, e, vec![])).collect()).unwrap()
    }

    #[test]
    fn uncensored_is_empirical_survival() {
        let d = data(&[(1.0, true), (2.0, true), (3.0, true)]);
        let s = km_estimate(&d, KmTarget::Failure).unwrap();
        assert_eq!(s.eval(1.0), 2.0 / 3.0);
        assert_eq!(s.eval(2.0), 1.0 / 3.0);
        assert_eq!(s.eval(3.0), 0.0);
    }

    #[test]
    fn hand_product_limit() {
        let d = data(&[(1.0, true), (2.0, false), (3.0, true)]);
        let s = km_estimate(&d, KmTarget::Failure).unwrap();
        assert_eq!(s.jump_times(), &[1.0, 3.0]);
        assert!((s.eval(1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.eval(3.0), 0.0);

        let g = km_estimate(&d, KmTarget::Censoring).unwrap();
        assert_eq!(g.jump_times(), &[2.0]);
        assert_eq!(g.eval(2.0), 0.5);
        assert_eq!(g.eval(3.0), 0.5);
    }

    #[test]
    fn ties_put_failures_first() {
        // A failure and a censoring at t = 2: the censored row is at risk for the
        // failure, but the failure is not at risk of censoring.
        let d = data(&[(1.0, true), (2.0, true), (2.0, false), (4.0, true)]);
        let s = km_estimate(&d, KmTarget::Failure).unwrap();
        assert!((s.eval(2.0) - 0.75 * (2.0 / 3.0)).abs() < 1e-15);
        let g = km_estimate(&d, KmTarget::Censoring).unwrap();
        assert!((g.eval(2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn jump_times_partition_by_event_flag() {
        let d = data(&[(1.0, true), (2.0, false), (3.0, true), (3.5, false), (5.0, false)]);
        let s = km_estimate(&d, KmTarget::Failure).unwrap();
        let g = km_estimate(&d, KmTarget::Censoring).unwrap();
        assert_eq!(s.jump_times(), &[1.0, 3.0]);
        assert_eq!(g.jump_times(), &[2.0, 3.5, 5.0]);
        assert_eq!(g.last_value(), 0.0);
    }
}
