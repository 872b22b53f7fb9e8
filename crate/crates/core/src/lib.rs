//! Distribution-free bootstrap conformal prediction intervals for
//! right-censored survival times.
//!
//! The crate is `no_std` (it needs `alloc`) and carries every algorithmic
//! piece of the method:
//!
//! - [`km`], [`censoring`] and [`ipcw`]: Kaplan–Meier curves, censoring
//!   distribution estimates and the inverse-probability-of-censoring weighted
//!   joint sample of `(T, X)` that drives the conformal scores.
//! - [`models`]: the interchangeable working models (Cox proportional hazards,
//!   Weibull AFT, log-normal AFT) with survival functions and generalized
//!   inverses.
//! - [`conformal`]: calibration, interval construction, remaining-lifetime
//!   intervals, split validation and the shift diagnostic.
//! - [`sim`]: the synthetic-data coverage study harness.
//!
//! IO, file formats, the CLI and the HTTP service live in the `survconf`
//! companion crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod censoring;
pub mod conformal;
pub mod curve;
pub mod data;
pub mod diagnostics;
mod error;
pub mod ipcw;
pub mod km;
mod linalg;
pub mod models;
pub mod normal;
pub mod rng;
pub mod sim;

pub use censoring::{fit_censoring_model, CensoringKind, CensoringModel};
pub use conformal::{
    calibrate, predict_interval, remaining_lifetime_interval, shift_diagnostic, split_validate, ConformalCalibration,
    ConformalConfig, Endpoint, PredictionInterval, Sidedness, SplitSummary,
};
pub use curve::StepSurvivalCurve;
pub use data::{Dataset, Observation};
pub use error::{Error, Result};
pub use ipcw::{ipcw_joint_sample, sample_pair, WeightedPair, WeightedPairSample};
pub use km::{km_estimate, KmTarget};
pub use models::{
    fit_cox, fit_lognormal, fit_weibull, fit_working_model, WorkingModel, WorkingModelFit, WorkingModelKind,
};
pub use rng::RandomStream;
