use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{newton_converged, LikelihoodEval, MAX_HALVINGS, MAX_ITER};
use crate::data::Dataset;
use crate::linalg::{constant_columns, full_rank, solve_spd};
use crate::{Error, Result};

/// A coefficient whose effect across the covariate's range exceeds `e^30` in
/// hazard ratio is taken as a sign of monotone likelihood (separation).
const MONOTONE_LIMIT: f64 = 30.0;

/// Nondecreasing step function with `Lambda(0) = 0`, right-continuous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeHazard {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl CumulativeHazard {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidInput("times and values differ in length".into()));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) || times.first().is_some_and(|&t| !(t > 0.0)) {
            return Err(Error::InvalidInput(
                "jump times must be positive and strictly ascending".into(),
            ));
        }
        let mut prev = 0.0;
        for &v in &values {
            if !(v.is_finite() && v >= prev) {
                return Err(Error::InvalidInput(
                    "cumulative hazard must be finite and nondecreasing".into(),
                ));
            }
            prev = v;
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            0.0
        } else {
            self.values[k - 1]
        }
    }

    pub fn eval_left(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            0.0
        } else {
            self.values[k - 1]
        }
    }

    /// First jump time at which the hazard reaches `target`; `None` beyond the
    /// last jump. Comparisons allow a relative slack of 1e-12 so targets that
    /// round-trip through `exp`/`log` land on the intended step.
    pub fn inverse(&self, target: f64) -> Option<f64> {
        if target <= 0.0 {
            return Some(0.0);
        }
        let threshold = target * (1.0 - 1e-12);
        let k = self.values.partition_point(|&v| v < threshold);
        self.times.get(k).copied()
    }

    pub fn last_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// One row for the partial likelihood.
///
/// Rows are ordered by `(time, exits_late)`. The risk set of an event row is
/// every row that is not ordered strictly before it, so with
/// `exits_late = !failure` a failure at `t` is at risk for censoring events at
/// `t` only when it is itself censored.
pub(crate) struct CoxRecord<'a> {
    pub time: f64,
    pub exits_late: bool,
    pub is_event: bool,
    pub x: &'a [f64],
}

pub(crate) struct CoxEstimate {
    pub beta: Vec<f64>,
    pub baseline: CumulativeHazard,
    pub log_likelihood: f64,
    pub iterations: usize,
}

struct Problem {
    time: Vec<f64>,
    late: Vec<bool>,
    event: Vec<bool>,
    /// Row-major centered active covariates, `n x k`.
    x: Vec<f64>,
    k: usize,
}

impl Problem {
    fn new(mut records: Vec<CoxRecord<'_>>, cols: &[usize], means: &[f64]) -> Self {
        records.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.exits_late.cmp(&b.exits_late)));
        let k = cols.len();
        let mut x = Vec::with_capacity(records.len() * k);
        for r in &records {
            for (a, &j) in cols.iter().enumerate() {
                x.push(r.x[j] - means[a]);
            }
        }
        Problem {
            time: records.iter().map(|r| r.time).collect(),
            late: records.iter().map(|r| r.exits_late).collect(),
            event: records.iter().map(|r| r.is_event).collect(),
            x,
            k,
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.k..(i + 1) * self.k]
    }

    /// Groups of rows sharing `(time, exits_late)`, as index ranges.
    fn groups(&self) -> Vec<(usize, usize)> {
        let n = self.time.len();
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=n {
            if i == n || self.time[i] != self.time[start] || self.late[i] != self.late[start] {
                out.push((start, i));
                start = i;
            }
        }
        out
    }

    fn eval(&self, beta: &[f64], want_derivs: bool) -> LikelihoodEval {
        let k = self.k;
        let mut ll = 0.0;
        let mut grad = vec![0.0; k];
        let mut hess = vec![0.0; k * k];
        let mut s0 = 0.0;
        let mut s1 = vec![0.0; k];
        let mut s2 = vec![0.0; k * k];
        for &(start, end) in self.groups().iter().rev() {
            let mut d = 0usize;
            let mut xsum = vec![0.0; k];
            let mut lpsum = 0.0;
            for i in start..end {
                let xi = self.row(i);
                let lp: f64 = xi.iter().zip(beta).map(|(a, b)| a * b).sum();
                let w = libm::exp(lp);
                s0 += w;
                if want_derivs {
                    for a in 0..k {
                        s1[a] += w * xi[a];
                        for b in 0..=a {
                            s2[a * k + b] += w * xi[a] * xi[b];
                        }
                    }
                }
                if self.event[i] {
                    d += 1;
                    lpsum += lp;
                    for a in 0..k {
                        xsum[a] += xi[a];
                    }
                }
            }
            if d == 0 {
                continue;
            }
            let df = d as f64;
            ll += lpsum - df * libm::log(s0);
            if want_derivs {
                for a in 0..k {
                    let m_a = s1[a] / s0;
                    grad[a] += xsum[a] - df * m_a;
                    for b in 0..=a {
                        let v = df * (s2[a * k + b] / s0 - m_a * s1[b] / s0);
                        hess[a * k + b] -= v;
                    }
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                hess[b * k + a] = hess[a * k + b];
            }
        }
        LikelihoodEval {
            value: ll,
            gradient: grad,
            hessian: hess,
        }
    }

    /// Breslow increments `d_j / sum_{risk} exp(x beta)` on the centered scale.
    fn breslow(&self, beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut s0 = 0.0;
        let mut jumps = Vec::new();
        for &(start, end) in self.groups().iter().rev() {
            let mut d = 0usize;
            for i in start..end {
                let lp: f64 = self.row(i).iter().zip(beta).map(|(a, b)| a * b).sum();
                s0 += libm::exp(lp);
                if self.event[i] {
                    d += 1;
                }
            }
            if d > 0 {
                jumps.push((self.time[start], d as f64 / s0));
            }
        }
        jumps.reverse();
        // A failure time and a censoring time can never both be event groups of
        // the same fit, so event group times are distinct.
        let times = jumps.iter().map(|j| j.0).collect();
        let mut acc = 0.0;
        let values = jumps
            .iter()
            .map(|j| {
                acc += j.1;
                acc
            })
            .collect();
        (times, values)
    }
}

/// Newton maximization of the Breslow partial likelihood with step halving.
pub(crate) fn fit_cox_records(records: Vec<CoxRecord<'_>>, p: usize) -> Result<CoxEstimate> {
    if !records.iter().any(|r| r.is_event) {
        return Err(Error::InvalidInput("no events to fit".into()));
    }
    let rows: Vec<&[f64]> = records.iter().map(|r| r.x).collect();
    let constant = constant_columns(&rows, p);
    let cols: Vec<usize> = (0..p).filter(|&j| !constant[j]).collect();
    if !full_rank(&rows, &cols) {
        return Err(Error::SingularDesign);
    }
    let n = rows.len() as f64;
    let means: Vec<f64> = cols
        .iter()
        .map(|&j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let ranges: Vec<f64> = cols
        .iter()
        .map(|&j| {
            let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r[j]), hi.max(r[j]))
            });
            hi - lo
        })
        .collect();
    drop(rows);

    let problem = Problem::new(records, &cols, &means);
    let k = cols.len();
    let mut beta = vec![0.0; k];
    let mut current = problem.eval(&beta, true);
    let mut iterations = 0;
    let mut converged = k == 0;
    while !converged {
        if iterations == MAX_ITER {
            if beta.iter().zip(&ranges).any(|(b, r)| (b * r).abs() > MONOTONE_LIMIT) {
                return Err(Error::FitDiverged(
                    "monotone partial likelihood (coefficient diverges)".into(),
                ));
            }
            return Err(Error::FitDiverged(format!(
                "Cox Newton did not converge in {MAX_ITER} iterations"
            )));
        }
        iterations += 1;
        let step = newton_step(&current, k)
            .ok_or_else(|| Error::FitDiverged("Cox information matrix is not invertible".into()))?;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            let eval = problem.eval(&trial, true);
            if eval.value.is_finite() && eval.value >= current.value - 1e-12 * current.value.abs() {
                accepted = Some((trial, eval));
                break;
            }
            scale *= 0.5;
        }
        let Some((trial, eval)) = accepted else {
            // No ascent left. At an interior optimum the Newton step is tiny;
            // a large step on a flat likelihood means beta runs off to infinity.
            if step.iter().zip(&ranges).any(|(s, r)| (s * r).abs() > 1e-3) {
                return Err(Error::FitDiverged(
                    "monotone partial likelihood (coefficient diverges)".into(),
                ));
            }
            break;
        };
        let change = (eval.value - current.value).abs();
        beta = trial;
        current = eval;
        converged = newton_converged(change, current.value, &step, scale, &ranges);
    }
    for (b, r) in beta.iter().zip(&ranges) {
        if (b * r).abs() > MONOTONE_LIMIT || !b.is_finite() {
            return Err(Error::FitDiverged(
                "monotone partial likelihood (coefficient diverges)".into(),
            ));
        }
    }

    let (times, centered) = problem.breslow(&beta);
    // Undo centering: Lambda0_raw = Lambda0_centered * exp(-mean . beta).
    let shift = libm::exp(-means.iter().zip(&beta).map(|(m, b)| m * b).sum::<f64>());
    let baseline = CumulativeHazard::new(times, centered.into_iter().map(|v| v * shift).collect())?;
    let mut full = vec![0.0; p];
    for (a, &j) in cols.iter().enumerate() {
        full[j] = beta[a];
    }
    Ok(CoxEstimate {
        beta: full,
        baseline,
        log_likelihood: current.value,
        iterations,
    })
}

/// Newton direction `(-H)^{-1} g`, with a growing ridge when `-H` is not
/// positive definite.
pub(crate) fn newton_step(eval: &LikelihoodEval, k: usize) -> Option<Vec<f64>> {
    let info = DMatrix::from_row_slice(k, k, &eval.hessian).map(|v| -v);
    let g = DVector::from_column_slice(&eval.gradient);
    let trace = (0..k).map(|i| info[(i, i)].abs()).sum::<f64>().max(1e-12);
    let mut ridge = 0.0;
    for _ in 0..12 {
        if let Some(x) = solve_spd(&info, &g, ridge) {
            return Some(x.iter().copied().collect());
        }
        ridge = if ridge == 0.0 { 1e-10 * trace } else { ridge * 100.0 };
    }
    None
}

/// Log partial likelihood (Breslow ties) with its score and Hessian at `beta`.
pub fn cox_log_partial_likelihood(data: &Dataset, beta: &[f64]) -> LikelihoodEval {
    let p = data.n_covariates();
    let records = data
        .rows()
        .iter()
        .map(|r| CoxRecord {
            time: r.time,
            exits_late: !r.event,
            is_event: r.event,
            x: &r.covariates,
        })
        .collect();
    let cols: Vec<usize> = (0..p).collect();
    Problem::new(records, &cols, &vec![0.0; p]).eval(beta, true)
}
