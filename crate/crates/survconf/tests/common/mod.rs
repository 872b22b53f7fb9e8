#![allow(dead_code)]

use std::fmt::Write as _;

use survconf::core::sim::{generate, FailureModel, GenerativeConfig, TauC};
use survconf::core::RandomStream;
use survconf::io::fmt_g17;

pub const NAMES: [&str; 4] = ["x1", "x2", "x3", "x4"];

/// Synthetic Weibull (or log-normal) training data as CSV text.
pub fn synthetic_csv(n: usize, seed: u64, lognormal: bool, tau: f64) -> String {
    let failure = if lognormal {
        FailureModel::default_lognormal()
    } else {
        FailureModel::default_weibull()
    };
    let cfg = GenerativeConfig {
        failure,
        n_train: n,
        n_test: 1,
        ..Default::default()
    };
    let sim = generate(&cfg, TauC::Finite(tau), RandomStream::new(seed, 0)).unwrap();
    let mut s = String::from("time,event,x1,x2,x3,x4\n");
    for r in sim.train.rows() {
        let x: Vec<String> = r.covariates.iter().map(|v| fmt_g17(*v)).collect();
        let _ = writeln!(s, "{},{},{}", fmt_g17(r.time), r.event as u8, x.join(","));
    }
    s
}

/// Covariate-only CSV: a handful of profiles.
pub fn profiles_csv() -> String {
    let mut s = String::from("x1,x2,x3,x4\n");
    for (a, b, c, d) in [
        (0.0, -2.0, 0.0, -1.0),
        (1.0, 0.5, 1.0, 0.0),
        (0.0, 3.0, 1.0, 1.5),
        (1.0, -4.0, 0.0, 0.4),
    ] {
        let _ = writeln!(s, "{a},{b},{c},{d}");
    }
    s
}
