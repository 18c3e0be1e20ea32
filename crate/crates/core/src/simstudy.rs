//! Monte Carlo comparison of estimators over a family x tau x n grid.
//!
//! Each replicate draws one sample, computes one LLPT estimate when any
//! divergence method is requested, and fits every method on that same sample.
//! Replicate `r` of cell `(family, tau, n)` is seeded by
//! `derive(master_seed, [hash(family), tau bits, n, r])`, so results do not
//! depend on thread scheduling.

use std::io::Write;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{CopulaFamily, CopulaSpec};
use crate::empirical::pseudo_observations_of_pairs;
use crate::error::{Error, Result};
use crate::estimators::{fit, Method};
use crate::llpt::{llpt_density, DEFAULT_K_FRAC};
use crate::seed;

/// Largest tolerated share of failed replicates in a cell.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub families: Vec<CopulaFamily>,
    pub taus: Vec<f64>,
    pub ns: Vec<usize>,
    pub methods: Vec<Method>,
    pub replications: usize,
    pub k_frac: f64,
    pub master_seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            families: vec![
                CopulaFamily::Clayton,
                CopulaFamily::Gumbel,
                CopulaFamily::Frank,
                CopulaFamily::Gaussian,
                CopulaFamily::StudentT { nu: 2.0 },
            ],
            taus: vec![0.1, 0.2, 0.4, 0.6, 0.8],
            ns: vec![30, 75, 150],
            methods: vec![Method::Mpl, Method::MPHD, Method::MPND],
            replications: 300,
            k_frac: DEFAULT_K_FRAC,
            master_seed: 20_190_401,
        }
    }
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: StudyConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::Config(format!("replications must be at least 2, got {}", self.replications)));
        }
        if self.families.is_empty() || self.taus.is_empty() || self.ns.is_empty() || self.methods.is_empty() {
            return Err(Error::Config("families, taus, ns and methods must all be non-empty".into()));
        }
        if !(self.k_frac > 0.0 && self.k_frac <= 1.0) {
            return Err(Error::Config(format!("k_frac must lie in (0, 1], got {}", self.k_frac)));
        }
        if let Some(n) = self.ns.iter().find(|&&n| n < 10) {
            return Err(Error::Config(format!("sample sizes must be at least 10, got {n}")));
        }
        for f in &self.families {
            for &t in &self.taus {
                CopulaSpec::from_tau(*f, t).map_err(|e| Error::Config(format!("tau {t} is not usable for {f}: {e}")))?;
            }
        }
        Ok(())
    }

    /// Number of CSV rows the study produces.
    pub fn row_count(&self) -> usize {
        self.families.len() * self.taus.len() * self.ns.len() * self.methods.len()
    }
}

/// Summary of one method in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub family: CopulaFamily,
    pub tau: f64,
    pub n: usize,
    pub method: Method,
    pub bias: f64,
    pub mse: f64,
    /// `100 sqrt(MSE / MSE_MPL)`; absent for MPL itself or when MPL was not run.
    pub rmse_pct: Option<f64>,
    pub failures: usize,
}

/// Mean error and mean squared error of estimates around `truth`.
pub fn bias_mse(estimates: &[f64], truth: f64) -> (f64, f64) {
    let m = estimates.len() as f64;
    let bias = estimates.iter().map(|e| e - truth).sum::<f64>() / m;
    let mse = estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / m;
    (bias, mse)
}

/// Relative root MSE in percent, `100 sqrt(mse / mse_reference)`.
pub fn rmse_pct(mse: f64, mse_reference: f64) -> f64 {
    100.0 * (mse / mse_reference).sqrt()
}

fn family_code(f: CopulaFamily) -> u64 {
    f.to_string().bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// Seed of replicate `r` in cell `(family, tau, n)`.
pub fn replicate_seed(master: u64, family: CopulaFamily, tau: f64, n: usize, r: usize) -> u64 {
    seed::derive(master, &[family_code(family), tau.to_bits(), n as u64, r as u64])
}

/// Estimates of every method on one replicate; `None` marks a failed fit.
fn run_replicate(spec: &CopulaSpec, n: usize, methods: &[Method], seed: u64, k_frac: f64) -> Vec<Option<f64>> {
    let Ok(ps) = spec.sample(n, seed).and_then(|d| pseudo_observations_of_pairs(&d)) else {
        return vec![None; methods.len()];
    };
    let chat = if methods.iter().any(Method::needs_llpt) { llpt_density(&ps, ps.points(), k_frac).ok() } else { None };
    methods
        .iter()
        .map(|m| {
            if m.needs_llpt() && chat.is_none() {
                return None;
            }
            fit(*m, spec.family(), &ps, chat.as_ref(), k_frac).ok().map(|f| f.theta_hat).filter(|t| t.is_finite())
        })
        .collect()
}

/// Run `m` replicates of one cell and summarise each method.
pub fn run_cell(family: CopulaFamily, tau: f64, n: usize, methods: &[Method], m: usize, master_seed: u64, k_frac: f64) -> Result<Vec<CellReport>> {
    let spec = CopulaSpec::from_tau(family, tau)?;
    let theta = spec.theta();
    let per_rep: Vec<Vec<Option<f64>>> =
        (0..m).into_par_iter().map(|r| run_replicate(&spec, n, methods, replicate_seed(master_seed, family, tau, n, r), k_frac)).collect();

    let mut stats = Vec::with_capacity(methods.len());
    for (j, method) in methods.iter().enumerate() {
        let ok: Vec<f64> = per_rep.iter().filter_map(|r| r[j]).collect();
        let failures = m - ok.len();
        if failures as f64 > MAX_FAILURE_FRACTION * m as f64 || ok.is_empty() {
            return Err(Error::Numeric(format!("cell {family} tau={tau} n={n}: {failures} of {m} {method} fits failed")));
        }
        let (bias, mse) = bias_mse(&ok, theta);
        stats.push((bias, mse, failures));
    }
    let mse_mpl = methods.iter().position(|m| *m == Method::Mpl).map(|j| stats[j].1);
    Ok(methods
        .iter()
        .zip(stats)
        .map(|(method, (bias, mse, failures))| CellReport {
            family,
            tau,
            n,
            method: *method,
            bias,
            mse,
            rmse_pct: match (method, mse_mpl) {
                (Method::Mpl, _) | (_, None) => None,
                (_, Some(r)) => Some(rmse_pct(mse, r)),
            },
            failures,
        })
        .collect())
}

/// Rows of a study plus the cells that aborted.
#[derive(Debug, Clone, Default)]
pub struct StudyReport {
    pub rows: Vec<CellReport>,
    pub aborted: Vec<String>,
}

impl StudyReport {
    /// The rows, or an error listing every aborted cell.
    pub fn into_result(self) -> Result<Vec<CellReport>> {
        if self.aborted.is_empty() {
            Ok(self.rows)
        } else {
            Err(Error::Numeric(format!("{} cell(s) aborted: {}", self.aborted.len(), self.aborted.join("; "))))
        }
    }
}

/// Run every cell of the configured grid, in family, tau, n order.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let mut report = StudyReport::default();
    let cells = cfg.families.len() * cfg.taus.len() * cfg.ns.len();
    let mut done = 0;
    for &family in &cfg.families {
        for &tau in &cfg.taus {
            for &n in &cfg.ns {
                done += 1;
                match run_cell(family, tau, n, &cfg.methods, cfg.replications, cfg.master_seed, cfg.k_frac) {
                    Ok(rows) => report.rows.extend(rows),
                    Err(e) => report.aborted.push(e.to_string()),
                }
                info!("cell {done}/{cells}: {family} tau={tau} n={n}");
            }
        }
    }
    Ok(report)
}

#[derive(Serialize)]
struct CsvRow {
    family: String,
    tau: f64,
    n: usize,
    method: String,
    bias: f64,
    mse: f64,
    rmse_pct: Option<f64>,
    failures: usize,
}

/// Write rows as CSV with header `family,tau,n,method,bias,mse,rmse_pct,failures`.
pub fn write_csv<W: Write>(rows: &[CellReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(CsvRow {
            family: r.family.to_string(),
            tau: r.tau,
            n: r.n,
            method: r.method.to_string(),
            bias: r.bias,
            mse: r.mse,
            rmse_pct: r.rmse_pct,
            failures: r.failures,
        })
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    if rows.is_empty() {
        w.write_record(["family", "tau", "n", "method", "bias", "mse", "rmse_pct", "failures"]).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
