//! The inverse-probability-of-censoring weighted joint sample of `(T, X)`.
//!
//! Each uncensored row `i` gets weight `w_i = 1 / G(Y_i- | x_i, site_i)`. The
//! unnormalized CDF `sum_{t_i <= t} w_i / n` reproduces the Kaplan–Meier
//! failure CDF exactly when `G` is the marginal KM censoring curve; the
//! normalized probabilities `p_i = w_i / sum w` define the resampling law.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::censoring::CensoringModel;
use crate::data::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPair {
    pub time: f64,
    pub covariates: Vec<f64>,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPairSample {
    entries: Vec<WeightedPair>,
    probabilities: Vec<f64>,
    /// Running sums of `probabilities`; the last element is 1.
    cumulative: Vec<f64>,
    /// Size of the dataset the sample came from, censored rows included.
    n_total: usize,
}

impl WeightedPairSample {
    fn from_entries(mut entries: Vec<WeightedPair>, n_total: usize) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput(
                "weighted sample needs at least one uncensored row".into(),
            ));
        }
        entries.sort_by(|a, b| a.time.total_cmp(&b.time));
        let total: f64 = entries.iter().map(|e| e.weight).sum();
        let probabilities: Vec<f64> = entries.iter().map(|e| e.weight / total).collect();
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(Self {
            entries,
            probabilities,
            cumulative,
            n_total,
        })
    }

    /// Uncensored rows of `data` with equal weight (the split-validation
    /// sampling law).
    pub fn uniform_uncensored(data: &Dataset) -> Result<Self> {
        let entries = data
            .rows()
            .iter()
            .filter(|r| r.event)
            .map(|r| WeightedPair {
                time: r.time,
                covariates: r.covariates.clone(),
                weight: 1.0,
                site: r.site,
            })
            .collect();
        Self::from_entries(entries, data.len())
    }

    /// Entries sorted by time.
    pub fn entries(&self) -> &[WeightedPair] {
        &self.entries
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    /// Unnormalized marginal CDF `sum_{t_i <= t} w_i / n`.
    pub fn marginal_cdf(&self, t: f64) -> f64 {
        let k = self.entries.partition_point(|e| e.time <= t);
        self.entries[..k].iter().map(|e| e.weight).sum::<f64>() / self.n_total as f64
    }

    /// Normalized marginal CDF `sum_{t_i <= t} p_i`.
    pub fn normalized_cdf(&self, t: f64) -> f64 {
        let k = self.entries.partition_point(|e| e.time <= t);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// Index of the entry selected by a uniform draw `u` in [0, 1).
    pub fn index_for(&self, u: f64) -> usize {
        self.cumulative.partition_point(|&c| c <= u).min(self.entries.len() - 1)
    }
}

pub fn ipcw_joint_sample(data: &Dataset, cm: &CensoringModel) -> Result<WeightedPairSample> {
    let mut entries = Vec::with_capacity(data.n_events());
    for r in data.rows().iter().filter(|r| r.event) {
        let g = cm.survival_left(r.time, &r.covariates, r.site)?;
        if !(g > 0.0) {
            return Err(Error::WeightDegenerate { time: r.time });
        }
        let weight = 1.0 / g;
        if !weight.is_finite() {
            return Err(Error::WeightDegenerate { time: r.time });
        }
        entries.push(WeightedPair {
            time: r.time,
            covariates: r.covariates.clone(),
            weight,
            site: r.site,
        });
    }
    WeightedPairSample::from_entries(entries, data.len())
}

/// Draws entry `i` with probability `p_i`.
pub fn sample_pair<'a, R: Rng + ?Sized>(s: &'a WeightedPairSample, rng: &mut R) -> &'a WeightedPair {
    let u: f64 = rng.random();
    &s.entries[s.index_for(u)]
}
