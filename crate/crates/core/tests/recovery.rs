//! Monte Carlo recovery of generative parameters and the probability
//! integral transform of correctly specified fits.

use survconf_core::diagnostics::{ks_critical_1pct, ks_uniform};
use survconf_core::rng::open_unit;
use survconf_core::sim::{draw_covariates, FailureModel};
use survconf_core::*;

fn std_normal(rng: &mut impl rand::RngCore) -> f64 {
    normal::ppf(open_unit(rng))
}

#[test]
fn cox_recovers_beta() {
    let beta = [0.5, -0.5];
    let mut rng = RandomStream::new(101, 0).rng();
    let rows = (0..5000)
        .map(|_| {
            let x = vec![std_normal(&mut rng), std_normal(&mut rng)];
            let rate = (beta[0] * x[0] + beta[1] * x[1]).exp();
            let t = -open_unit(&mut rng).ln() / rate;
            let c = 3.0 * open_unit(&mut rng);
            Observation::new(t.min(c), t <= c, x)
        })
        .collect();
    let fit = fit_cox(&Dataset::unnamed(rows).unwrap()).unwrap();
    let WorkingModel::Cox { beta: b, .. } = &fit.model else {
        panic!()
    };
    for (est, truth) in b.iter().zip(beta) {
        assert!((est - truth).abs() < 0.1, "{b:?}");
    }
}

#[test]
fn lognormal_recovers_coefficients() {
    let (beta, sigma) = ([1.0, 0.3], 0.5);
    let mut rng = RandomStream::new(102, 0).rng();
    let rows = (0..5000)
        .map(|_| {
            let x = vec![std_normal(&mut rng), std_normal(&mut rng)];
            let t = (beta[0] * x[0] + beta[1] * x[1] + sigma * std_normal(&mut rng)).exp();
            let c = 6.0 * open_unit(&mut rng);
            Observation::new(t.min(c), t <= c, x)
        })
        .collect();
    let fit = fit_lognormal(&Dataset::unnamed(rows).unwrap()).unwrap();
    let WorkingModel::Lognormal {
        intercept,
        beta: b,
        sigma: s,
    } = &fit.model
    else {
        panic!()
    };
    assert!(intercept.abs() < 0.1);
    assert!((b[0] - beta[0]).abs() < 0.1 && (b[1] - beta[1]).abs() < 0.1, "{b:?}");
    assert!((s - sigma).abs() < 0.1);
}

#[test]
fn regression_censoring_recovers_gamma() {
    let mut rng = RandomStream::new(103, 0).rng();
    let rows = (0..5000)
        .map(|_| {
            let x = vec![std_normal(&mut rng)];
            let t = -open_unit(&mut rng).ln();
            let c = -open_unit(&mut rng).ln() / (0.5 * x[0]).exp();
            Observation::new(t.min(c), t <= c, x)
        })
        .collect();
    let cm = fit_censoring_model(&Dataset::unnamed(rows).unwrap(), CensoringKind::Regression).unwrap();
    let CensoringModel::Regression { gamma, .. } = cm else {
        panic!()
    };
    assert!((gamma[0] - 0.5).abs() < 0.1, "{gamma:?}");
}

/// Fits `kind` on censored training data from `truth`, then checks that
/// `S(T | X)` on 5000 fresh uncensored rows is uniform.
fn pit_is_uniform(truth: FailureModel, kind: WorkingModelKind, seed: u64) {
    let mut rng = RandomStream::new(seed, 0).rng();
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
        let x = draw_covariates(rng);
        let t = truth.time(&x, open_unit(rng));
        (x, t)
    };
    let train = (0..3000)
        .map(|_| {
            let (x, t) = draw(&mut rng);
            let c = 40.0 * open_unit(&mut rng);
            Observation::new(t.min(c), t <= c, x)
        })
        .collect();
    let fit = fit_working_model(&Dataset::unnamed(train).unwrap(), kind).unwrap();
    let scores: Vec<f64> = (0..5000)
        .map(|_| {
            let (x, t) = draw(&mut rng);
            fit.survival(t, &x)
        })
        .collect();
    let ks = ks_uniform(&scores);
    assert!(ks < ks_critical_1pct(scores.len()), "{kind:?}: KS {ks}");
}

#[test]
fn pit_uniform_for_matching_models() {
    pit_is_uniform(FailureModel::default_lognormal(), WorkingModelKind::Lognormal, 201);
    pit_is_uniform(FailureModel::default_weibull(), WorkingModelKind::Weibull, 202);
    // Weibull data also satisfy proportional hazards.
    pit_is_uniform(FailureModel::default_weibull(), WorkingModelKind::Cox, 203);
}
