//! Cramer-von Mises goodness of fit with a parametric bootstrap p-value, and AIC.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{CopulaFamily, CopulaSpec};
use crate::empirical::{empirical_copula_at_points, pseudo_observations_of_pairs, PseudoSample};
use crate::error::{Error, Result};
use crate::estimators::{fit, pseudo_loglik, FitResult, Method};
use crate::seed;

/// Smallest accepted number of bootstrap replicates.
pub const MIN_BOOTSTRAP: usize = 99;
/// Largest tolerated share of failed bootstrap replicates.
pub const MAX_DROP_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub family: CopulaFamily,
    pub method: Method,
    pub theta_hat: f64,
    pub tau_hat: f64,
    pub s_n: f64,
    pub p_value: f64,
    /// Replicates that entered the p-value.
    pub bootstrap_reps: usize,
    /// Replicates whose refit failed.
    pub dropped: usize,
    pub aic: f64,
}

/// `S_n = sum_i (C_n(u_i, v_i) - C(u_i, v_i; theta))^2`.
pub fn cvm_statistic(spec: &CopulaSpec, ps: &PseudoSample) -> Result<f64> {
    let cn = empirical_copula_at_points(ps);
    let mut s = 0.0;
    for (p, c) in ps.points().iter().zip(cn) {
        let d = c - spec.cdf(*p)?;
        s += d * d;
    }
    Ok(s)
}

/// `(1 + exceed) / (reps + 1)`.
pub fn bootstrap_p(exceed: usize, reps: usize) -> f64 {
    (1 + exceed) as f64 / (reps + 1) as f64
}

/// AIC for a one-parameter copula from the pseudo log-likelihood.
pub fn aic(spec: &CopulaSpec, ps: &PseudoSample) -> f64 {
    2.0 - 2.0 * pseudo_loglik(spec, ps)
}

/// Fit `family` by `method`, compute `S_n`, and calibrate it by `b` parametric
/// bootstrap replicates. Replicate `r` draws from seed `derive(seed, [r])`.
pub fn bootstrap_pvalue(family: CopulaFamily, ps: &PseudoSample, method: Method, b: usize, seed: u64, k_frac: f64) -> Result<GofResult> {
    if b < MIN_BOOTSTRAP {
        return Err(Error::Config(format!("bootstrap needs B >= {MIN_BOOTSTRAP}, got {b}")));
    }
    let fitted = fit(method, family, ps, None, k_frac)?;
    let spec = fitted.spec();
    let s_n = cvm_statistic(&spec, ps)?;
    let n = ps.len();

    let stats: Vec<Option<f64>> = (0..b as u64)
        .into_par_iter()
        .map(|r| replicate(&spec, method, n, seed::derive(seed, &[r]), k_frac).ok().filter(|s| s.is_finite()))
        .collect();
    let dropped = stats.iter().filter(|s| s.is_none()).count();
    if dropped as f64 > MAX_DROP_FRACTION * b as f64 {
        return Err(Error::Numeric(format!("{dropped} of {b} bootstrap refits failed")));
    }
    let ok: Vec<f64> = stats.into_iter().flatten().collect();
    let exceed = ok.iter().filter(|&&s| s > s_n).count();
    Ok(gof_result(&fitted, ps, s_n, bootstrap_p(exceed, ok.len()), ok.len(), dropped))
}

fn replicate(spec: &CopulaSpec, method: Method, n: usize, seed: u64, k_frac: f64) -> Result<f64> {
    let draw = spec.sample(n, seed)?;
    let ps = pseudo_observations_of_pairs(&draw)?;
    let refit: FitResult = fit(method, spec.family(), &ps, None, k_frac)?;
    cvm_statistic(&refit.spec(), &ps)
}

fn gof_result(fitted: &FitResult, ps: &PseudoSample, s_n: f64, p_value: f64, reps: usize, dropped: usize) -> GofResult {
    GofResult {
        family: fitted.family,
        method: fitted.method,
        theta_hat: fitted.theta_hat,
        tau_hat: fitted.tau_hat,
        s_n,
        p_value,
        bootstrap_reps: reps,
        dropped,
        aic: aic(&fitted.spec(), ps),
    }
}
