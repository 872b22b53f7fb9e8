//! Weibull and log-normal accelerated failure time fits.
//!
//! Both families share `log T = mu(x) + s * eps` with `s = exp(tau)`; they
//! differ only in the error law (minimum Gumbel for Weibull, standard normal
//! for log-normal). Parameters are packed as `[intercept, beta.., tau]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::cox::newton_step;
use super::{newton_converged, LikelihoodEval, WorkingModel, WorkingModelFit, MAX_HALVINGS, MAX_ITER};
use crate::data::Dataset;
use crate::linalg::{constant_columns, full_rank, solve_spd};
use crate::normal;
use crate::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AftFamily {
    Weibull,
    Lognormal,
}

impl AftFamily {
    /// `(g, g', g'')` where `g` is the log density (event) or log survival
    /// (censored) of the standardized error, up to constants.
    fn kernel(self, z: f64, event: bool) -> (f64, f64, f64) {
        match (self, event) {
            (AftFamily::Weibull, true) => {
                let ez = libm::exp(z);
                (z - ez, 1.0 - ez, -ez)
            }
            (AftFamily::Weibull, false) => {
                let ez = libm::exp(z);
                (-ez, -ez, -ez)
            }
            (AftFamily::Lognormal, true) => (normal::ln_pdf(z), -z, -1.0),
            (AftFamily::Lognormal, false) => {
                let lam = normal::inv_mills(z);
                (normal::ln_sf(z), -lam, -lam * (lam - z))
            }
        }
    }
}

struct Problem {
    /// Row-major design with a leading intercept column, `n x (k + 1)`.
    design: Vec<f64>,
    log_t: Vec<f64>,
    event: Vec<bool>,
    width: usize,
}

impl Problem {
    fn eval(&self, family: AftFamily, params: &[f64]) -> LikelihoodEval {
        let m = self.width;
        let dim = m + 1;
        let tau = params[m];
        let s = libm::exp(tau);
        let mut ll = 0.0;
        let mut grad = vec![0.0; dim];
        let mut hess = vec![0.0; dim * dim];
        for (i, (&lt, &ev)) in self.log_t.iter().zip(&self.event).enumerate() {
            let row = &self.design[i * m..(i + 1) * m];
            let mu: f64 = row.iter().zip(params).map(|(a, b)| a * b).sum();
            let z = (lt - mu) / s;
            let (g, g1, g2) = family.kernel(z, ev);
            let d = if ev { 1.0 } else { 0.0 };
            ll += g - d * (tau + lt);
            for a in 0..m {
                grad[a] -= g1 * row[a] / s;
                for b in 0..=a {
                    hess[a * dim + b] += g2 * row[a] * row[b] / (s * s);
                }
                hess[m * dim + a] += row[a] * (g2 * z + g1) / s;
            }
            grad[m] -= g1 * z + d;
            hess[m * dim + m] += g2 * z * z + g1 * z;
        }
        for a in 0..dim {
            for b in 0..a {
                hess[b * dim + a] = hess[a * dim + b];
            }
        }
        LikelihoodEval {
            value: ll,
            gradient: grad,
            hessian: hess,
        }
    }
}

fn build(data: &Dataset, cols: &[usize]) -> Problem {
    let width = cols.len() + 1;
    let mut design = Vec::with_capacity(data.len() * width);
    for r in data.rows() {
        design.push(1.0);
        design.extend(cols.iter().map(|&j| r.covariates[j]));
    }
    Problem {
        design,
        log_t: data.rows().iter().map(|r| libm::log(r.time)).collect(),
        event: data.rows().iter().map(|r| r.event).collect(),
        width,
    }
}

/// Least squares on `log t` among events, as the Newton starting point.
fn start_values(problem: &Problem, family: AftFamily) -> Vec<f64> {
    let m = problem.width;
    let mut xtx = nalgebra::DMatrix::<f64>::zeros(m, m);
    let mut xty = nalgebra::DVector::<f64>::zeros(m);
    let mut n_ev = 0usize;
    for (i, &ev) in problem.event.iter().enumerate() {
        if !ev {
            continue;
        }
        n_ev += 1;
        let row = &problem.design[i * m..(i + 1) * m];
        for a in 0..m {
            xty[a] += row[a] * problem.log_t[i];
            for b in 0..m {
                xtx[(a, b)] += row[a] * row[b];
            }
        }
    }
    let mut coef = vec![0.0; m];
    let solved = if n_ev > m {
        solve_spd(&xtx, &xty, 1e-8 * xtx[(0, 0)])
    } else {
        None
    };
    match solved {
        Some(b) => coef.copy_from_slice(b.as_slice()),
        None => {
            // Too few events for the full regression: intercept only.
            coef[0] = xty[0] / n_ev as f64;
        }
    }
    let mut rss = 0.0;
    for (i, &ev) in problem.event.iter().enumerate() {
        if ev {
            let row = &problem.design[i * m..(i + 1) * m];
            let r = problem.log_t[i] - row.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>();
            rss += r * r;
        }
    }
    let mut s = libm::sqrt(rss / n_ev as f64);
    if !(s > 1e-3) {
        s = 1.0;
    }
    if family == AftFamily::Weibull {
        s *= libm::sqrt(6.0) / core::f64::consts::PI;
        coef[0] += EULER_GAMMA * s;
    }
    coef.push(libm::log(s));
    coef
}

pub(crate) fn fit_aft(data: &Dataset, family: AftFamily) -> Result<WorkingModelFit> {
    let p = data.n_covariates();
    let rows: Vec<&[f64]> = data.rows().iter().map(|r| r.covariates.as_slice()).collect();
    let constant = constant_columns(&rows, p);
    let cols: Vec<usize> = (0..p).filter(|&j| !constant[j]).collect();
    if !full_rank(&rows, &cols) {
        return Err(Error::SingularDesign);
    }
    let problem = build(data, &cols);
    let dim = problem.width + 1;
    let mut ranges = vec![1.0; dim];
    for (a, &j) in cols.iter().enumerate() {
        let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r[j]), hi.max(r[j]))
        });
        ranges[a + 1] = hi - lo;
    }

    let mut params = start_values(&problem, family);
    let mut current = problem.eval(family, &params);
    if !current.value.is_finite() {
        return Err(Error::FitDiverged(
            "log-likelihood is not finite at the starting values".into(),
        ));
    }
    let mut iterations = 0;
    loop {
        if iterations == MAX_ITER {
            return Err(Error::FitDiverged(format!(
                "AFT Newton did not converge in {MAX_ITER} iterations"
            )));
        }
        iterations += 1;
        let step = newton_step(&current, dim)
            .ok_or_else(|| Error::FitDiverged("AFT information matrix is not invertible".into()))?;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = params.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            let eval = problem.eval(family, &trial);
            if eval.value.is_finite() && eval.value >= current.value - 1e-12 * current.value.abs() {
                accepted = Some((trial, eval));
                break;
            }
            scale *= 0.5;
        }
        let Some((trial, eval)) = accepted else {
            if step.iter().zip(&ranges).any(|(s, r)| (s * r).abs() > 1e-3) {
                return Err(Error::FitDiverged("monotone likelihood (a parameter diverges)".into()));
            }
            break;
        };
        let change = (eval.value - current.value).abs();
        params = trial;
        current = eval;
        if newton_converged(change, current.value, &step, scale, &ranges) {
            break;
        }
    }
    let tau = params[dim - 1];
    if !(tau > -30.0) || params.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitDiverged("scale parameter collapsed to zero".into()));
    }

    let mut beta = vec![0.0; p];
    for (a, &j) in cols.iter().enumerate() {
        beta[j] = params[a + 1];
    }
    let intercept = params[0];
    let model = match family {
        AftFamily::Weibull => WorkingModel::Weibull {
            intercept,
            beta,
            log_scale: tau,
        },
        AftFamily::Lognormal => WorkingModel::Lognormal {
            intercept,
            beta,
            sigma: libm::exp(tau),
        },
    };
    Ok(WorkingModelFit {
        model,
        log_likelihood: current.value,
        iterations,
        converged: true,
    })
}

/// Censored log-likelihood `sum delta log f(t) + (1 - delta) log S(t)` at
/// `params = [intercept, beta.., log_scale]`, with gradient and Hessian.
pub fn aft_log_likelihood(data: &Dataset, family: AftFamily, params: &[f64]) -> LikelihoodEval {
    let cols: Vec<usize> = (0..data.n_covariates()).collect();
    build(data, &cols).eval(family, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Observation;

    #[test]
    fn lognormal_uncensored_is_analytic() {
        let ts = [0.5, 1.2, 2.0, 3.3, 7.1, 0.9];
        let d = Dataset::unnamed(ts.iter().map(|&t| Observation::new(t, true, vec![])).collect()).unwrap();
        let fit = fit_aft(&d, AftFamily::Lognormal).unwrap();
        let logs: Vec<f64> = ts.iter().map(|&t| libm::log(t)).collect();
        let mu = logs.iter().sum::<f64>() / 6.0;
        let var = logs.iter().map(|l| (l - mu) * (l - mu)).sum::<f64>() / 6.0;
        let WorkingModel::Lognormal { intercept, sigma, .. } = fit.model else {
            panic!()
        };
        assert!((intercept - mu).abs() < 1e-8);
        assert!((sigma * sigma - var).abs() < 1e-8);
    }

    #[test]
    fn constant_column_gets_zero() {
        let d = Dataset::unnamed(
            [(1.0, true), (2.0, false), (3.0, true), (4.5, true)]
                .iter()
                .map(|&(t, e)| Observation::new(t, e, vec![2.0]))
                .collect(),
        )
        .unwrap();
        let fit = fit_aft(&d, AftFamily::Weibull).unwrap();
        let WorkingModel::Weibull { beta, .. } = fit.model else {
            panic!()
        };
        assert_eq!(beta, vec![0.0]);
    }
}
