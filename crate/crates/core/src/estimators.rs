//! Maximum pseudo-likelihood and minimum pseudo alpha-divergence estimators.
//!
//! Every estimator searches Kendall's tau in `[-0.985, 0.985]` (Gumbel:
//! `[0, 0.985]`) and maps it to the copula parameter, so the same bounded
//! scalar search serves all families. A 41-point scan picks the bracket and
//! Brent's method refines it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::copula::{CopulaFamily, CopulaSpec, PreparedPoints, DENSITY_CEILING};
use crate::empirical::PseudoSample;
use crate::error::{Error, Result};
use crate::llpt::{llpt_density, LlptEstimate};
use crate::optimize::brent_minimize;

/// Bound of the tau search interval.
pub const TAU_BOUND: f64 = 0.985;
/// Floor applied to LLPT values inside divergence sums.
pub const CHAT_FLOOR: f64 = 1e-10;
/// Floor applied to parametric densities before taking logs.
pub const LOG_DENSITY_FLOOR: f64 = 1e-300;
const SCAN_POINTS: usize = 41;
const XTOL: f64 = 1e-8;
const MAX_EVALS: usize = 200;
const MIN_N: usize = 10;

/// Which alpha-divergence to minimize.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DivergenceKind {
    /// `(1/n) sum (1 - sqrt(c / chat))^2`, alpha = 1/2.
    Hellinger,
    /// `(1/n) sum (1 - c / chat)^2`, alpha = 2.
    Neyman,
    /// `(1/n) sum g(c / chat)` with `g(t) = (t^(1-alpha) + (alpha-1) t - alpha) / (alpha (alpha-1))`.
    Alpha { alpha: f64 },
    /// The alpha -> 1 limit, `(1/n) sum (ln chat - ln c)`.
    KullbackLeibler,
}

impl DivergenceKind {
    /// Divergence for a given alpha. 1/2 and 2 resolve to the Hellinger and
    /// Neyman sums, alpha = 1 to the Kullback-Leibler limit.
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha == 0.0 {
            return Err(Error::ParameterDomain(format!("alpha must be finite and nonzero, got {alpha}")));
        }
        Ok(if alpha == 0.5 {
            DivergenceKind::Hellinger
        } else if alpha == 2.0 {
            DivergenceKind::Neyman
        } else if alpha == 1.0 {
            DivergenceKind::KullbackLeibler
        } else {
            DivergenceKind::Alpha { alpha }
        })
    }

    pub fn alpha(&self) -> f64 {
        match self {
            DivergenceKind::Hellinger => 0.5,
            DivergenceKind::Neyman => 2.0,
            DivergenceKind::Alpha { alpha } => *alpha,
            DivergenceKind::KullbackLeibler => 1.0,
        }
    }

    /// Contribution of one point, given `c` (already capped) and `chat` (already floored).
    #[inline]
    fn term(&self, c: f64, chat: f64) -> f64 {
        let t = c / chat;
        match self {
            DivergenceKind::Hellinger => {
                let r = 1.0 - t.sqrt();
                r * r
            }
            DivergenceKind::Neyman => {
                let r = 1.0 - t;
                r * r
            }
            DivergenceKind::Alpha { alpha } => {
                let a = *alpha;
                let t = t.max(LOG_DENSITY_FLOOR);
                // exp((1-a) ln t) - 1 keeps precision near t = 1.
                (((1.0 - a) * t.ln()).exp_m1() + (a - 1.0) * (t - 1.0)) / (a * (a - 1.0))
            }
            DivergenceKind::KullbackLeibler => chat.ln() - c.max(LOG_DENSITY_FLOOR).ln(),
        }
    }
}

/// An estimation method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    /// Maximum pseudo-likelihood.
    Mpl,
    /// Minimum pseudo divergence against an LLPT density estimate.
    Divergence(DivergenceKind),
}

impl Method {
    pub const MPHD: Method = Method::Divergence(DivergenceKind::Hellinger);
    pub const MPND: Method = Method::Divergence(DivergenceKind::Neyman);
    pub const MPKLD: Method = Method::Divergence(DivergenceKind::KullbackLeibler);

    /// Whether the method consumes an LLPT estimate.
    pub fn needs_llpt(&self) -> bool {
        matches!(self, Method::Divergence(_))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Mpl => write!(f, "mpl"),
            Method::Divergence(DivergenceKind::Hellinger) => write!(f, "mphd"),
            Method::Divergence(DivergenceKind::Neyman) => write!(f, "mpnd"),
            Method::Divergence(DivergenceKind::KullbackLeibler) => write!(f, "mpkld"),
            Method::Divergence(DivergenceKind::Alpha { alpha }) => write!(f, "mpad:{alpha}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "mpl" => Ok(Method::Mpl),
            "mphd" => Ok(Method::MPHD),
            "mpnd" => Ok(Method::MPND),
            "mpkld" => Ok(Method::MPKLD),
            _ => {
                let alpha = s
                    .strip_prefix("mpad:")
                    .ok_or_else(|| Error::Parse(format!("unknown method '{s}' (expected mpl, mphd, mpnd, mpkld or mpad:<alpha>)")))?;
                let alpha: f64 = alpha.parse().map_err(|_| Error::Parse(format!("invalid alpha in '{s}'")))?;
                Ok(Method::Divergence(DivergenceKind::from_alpha(alpha)?))
            }
        }
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

/// Outcome of a parameter fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub method: Method,
    pub family: CopulaFamily,
    pub theta_hat: f64,
    pub tau_hat: f64,
    /// Log-likelihood for MPL, divergence value otherwise.
    pub objective_at_opt: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl FitResult {
    /// The fitted copula. Clayton and Frank fits at tau = 0 sit at the
    /// independence limit `theta = 0`, which is returned as-is.
    pub fn spec(&self) -> CopulaSpec {
        CopulaSpec::new_limit(self.family, self.theta_hat)
    }
}

/// `sum_i ln c(u_i, v_i; theta)` with densities floored at 1e-300.
pub fn pseudo_loglik(spec: &CopulaSpec, ps: &PseudoSample) -> f64 {
    let prep = PreparedPoints::new(spec.family(), ps.points());
    loglik_prepared(&prep, spec.theta())
}

fn loglik_prepared(prep: &PreparedPoints, theta: f64) -> f64 {
    let floor = LOG_DENSITY_FLOOR.ln();
    (0..prep.len())
        .map(|i| {
            let l = prep.ln_pdf(theta, i);
            if l.is_nan() {
                floor
            } else {
                l.clamp(floor, DENSITY_CEILING.ln())
            }
        })
        .sum()
}

/// Empirical divergence from parametric density values `c` and LLPT values `chat`.
pub fn divergence_from_values(kind: DivergenceKind, c: &[f64], chat: &[f64]) -> Result<f64> {
    if c.len() != chat.len() {
        return Err(Error::Contract(format!("density vectors differ in length: {} vs {}", c.len(), chat.len())));
    }
    if c.is_empty() {
        return Err(Error::Contract("divergence of an empty sample".into()));
    }
    let s: f64 = c.iter().zip(chat).map(|(&ci, &hi)| kind.term(ci.clamp(0.0, DENSITY_CEILING), hi.max(CHAT_FLOOR))).sum();
    Ok(s / c.len() as f64)
}

/// Empirical alpha-divergence between `chat` and the copula `spec` at the pseudo-observations.
pub fn alpha_divergence_objective(kind: DivergenceKind, chat: &LlptEstimate, spec: &CopulaSpec, ps: &PseudoSample) -> Result<f64> {
    if chat.len() != ps.len() {
        return Err(Error::Contract(format!("LLPT estimate has {} values for {} pseudo-observations", chat.len(), ps.len())));
    }
    let prep = PreparedPoints::new(spec.family(), ps.points());
    Ok(divergence_prepared(kind, &prep, chat.values(), spec.theta()))
}

fn divergence_prepared(kind: DivergenceKind, prep: &PreparedPoints, chat: &[f64], theta: f64) -> f64 {
    let s: f64 = (0..prep.len()).map(|i| kind.term(prep.pdf_clamped(theta, i), chat[i].max(CHAT_FLOOR))).sum();
    s / prep.len() as f64
}

/// Tau search interval for a family.
pub fn tau_search_interval(family: CopulaFamily) -> (f64, f64) {
    match family {
        CopulaFamily::Gumbel => (0.0, TAU_BOUND),
        _ => (-TAU_BOUND, TAU_BOUND),
    }
}

/// Minimize `objective(theta)` over the tau search interval.
fn search<F: FnMut(f64) -> f64>(family: CopulaFamily, mut objective: F) -> Result<(f64, f64, usize, bool)> {
    let (lo, hi) = tau_search_interval(family);
    let mut eval = |tau: f64| -> Result<f64> {
        let theta = family.theta_from_tau(tau)?;
        let v = objective(theta);
        Ok(if v.is_nan() { f64::MAX } else { v.min(f64::MAX) })
    };
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let mut best = (0, f64::INFINITY);
    for k in 0..SCAN_POINTS {
        let v = eval(lo + k as f64 * step)?;
        if v < best.1 {
            best = (k, v);
        }
    }
    let a = lo + best.0.saturating_sub(1) as f64 * step;
    let b = lo + (best.0 + 1).min(SCAN_POINTS - 1) as f64 * step;
    let mut err = None;
    let min = brent_minimize(
        |tau| match eval(tau) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::MAX
            }
        },
        a,
        b,
        XTOL,
        MAX_EVALS,
    );
    if let Some(e) = err {
        return Err(e);
    }
    // Keep the scan point if Brent did not improve on it.
    let (tau, value) = if min.value <= best.1 { (min.x, min.value) } else { (lo + best.0 as f64 * step, best.1) };
    let converged = min.converged && min.bracket_width <= XTOL * 4.0 + f64::EPSILON;
    Ok((tau, value, SCAN_POINTS + min.evaluations, converged))
}

fn check_size(ps: &PseudoSample) -> Result<()> {
    if ps.len() < MIN_N {
        return Err(Error::InsufficientData(format!("estimation needs n >= {MIN_N}, got {}", ps.len())));
    }
    let p0 = ps.points()[0];
    if ps.points().iter().all(|p| p.u == p0.u) || ps.points().iter().all(|p| p.v == p0.v) {
        return Err(Error::DegenerateData("a margin is constant".into()));
    }
    Ok(())
}

fn finish(method: Method, family: CopulaFamily, tau: f64, objective: f64, evaluations: usize, converged: bool) -> Result<FitResult> {
    let theta_hat = family.theta_from_tau(tau)?;
    Ok(FitResult { method, family, theta_hat, tau_hat: tau, objective_at_opt: objective, evaluations, converged })
}

/// Maximum pseudo-likelihood estimate.
pub fn mpl_fit(family: CopulaFamily, ps: &PseudoSample) -> Result<FitResult> {
    check_size(ps)?;
    let prep = PreparedPoints::new(family, ps.points());
    let n = ps.len() as f64;
    let (tau, value, evals, conv) = search(family, |theta| -loglik_prepared(&prep, theta) / n)?;
    finish(Method::Mpl, family, tau, -value * n, evals, conv)
}

/// Minimum pseudo alpha-divergence estimate against the LLPT values `chat`.
pub fn mpad_fit(kind: DivergenceKind, family: CopulaFamily, ps: &PseudoSample, chat: &LlptEstimate) -> Result<FitResult> {
    check_size(ps)?;
    if chat.len() != ps.len() {
        return Err(Error::Contract(format!("LLPT estimate has {} values for {} pseudo-observations", chat.len(), ps.len())));
    }
    let prep = PreparedPoints::new(family, ps.points());
    let (tau, value, evals, conv) = search(family, |theta| divergence_prepared(kind, &prep, chat.values(), theta))?;
    finish(Method::Divergence(kind), family, tau, value, evals, conv)
}

/// Fit by `method`, reusing `chat` when given and computing it with `k_frac` otherwise.
pub fn fit(method: Method, family: CopulaFamily, ps: &PseudoSample, chat: Option<&LlptEstimate>, k_frac: f64) -> Result<FitResult> {
    match method {
        Method::Mpl => mpl_fit(family, ps),
        Method::Divergence(kind) => match chat {
            Some(c) => mpad_fit(kind, family, ps, c),
            None => {
                check_size(ps)?;
                let c = llpt_density(ps, ps.points(), k_frac)?;
                mpad_fit(kind, family, ps, &c)
            }
        },
    }
}
