use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Right-continuous, nonincreasing step function on `[0, inf)` with value 1
/// before the first jump.
///
/// Evaluation beyond the last jump returns the last value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSurvivalCurve {
    jump_times: Vec<f64>,
    values: Vec<f64>,
}

impl StepSurvivalCurve {
    pub fn new(jump_times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if jump_times.len() != values.len() {
            return Err(Error::InvalidInput("jump_times and values differ in length".into()));
        }
        if jump_times.windows(2).any(|w| !(w[0] < w[1])) || jump_times.first().is_some_and(|&t| !(t > 0.0)) {
            return Err(Error::InvalidInput(
                "jump times must be positive and strictly ascending".into(),
            ));
        }
        let mut prev = 1.0;
        for &v in &values {
            if !(0.0..=1.0).contains(&v) || v > prev {
                return Err(Error::InvalidInput(
                    "curve values must lie in [0, 1] and not increase".into(),
                ));
            }
            prev = v;
        }
        Ok(Self { jump_times, values })
    }

    /// The curve that is 1 everywhere.
    pub fn constant_one() -> Self {
        Self {
            jump_times: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `S(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s <= t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    /// `S(t-)`, the limit from the left.
    pub fn eval_left(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s < t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    /// Generalized inverse `inf{t : S(t) <= u}`; `None` if the curve never
    /// falls to `u`.
    pub fn inverse(&self, u: f64) -> Option<f64> {
        if u >= 1.0 {
            return Some(0.0);
        }
        let k = self.values.partition_point(|&v| v > u);
        self.jump_times.get(k).copied()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.jump_times.last().copied()
    }

    pub fn last_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(1.0)
    }
}
