//! The five one-parameter bivariate copula families: Clayton, Gumbel, Frank,
//! Gaussian and Student-t (with fixed degrees of freedom).
//!
//! [`CopulaSpec`] pairs a family with a validated dependence parameter and
//! exposes the CDF, density, sampler and Kendall's tau. [`PreparedPoints`]
//! caches per-observation transforms so that likelihood and divergence
//! objectives can evaluate the log-density at many parameter values cheaply.

mod archimedean;
pub mod elliptical;

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::brent_root;
use crate::special::{debye1, norm_cdf, norm_quantile, t_cdf, t_quantile};

use archimedean::{clayton, frank, gumbel};

/// Ceiling applied to density values.
pub const DENSITY_CEILING: f64 = 1e12;

/// A copula family. Student-t carries its fixed degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CopulaFamily {
    Clayton,
    Gumbel,
    Frank,
    Gaussian,
    StudentT { nu: f64 },
}

impl CopulaFamily {
    /// Student-t family; `nu` must exceed 1.
    pub fn student_t(nu: f64) -> Result<Self> {
        if !(nu.is_finite() && nu > 1.0) {
            return Err(Error::ParameterDomain(format!("Student-t degrees of freedom must be finite and > 1, got {nu}")));
        }
        Ok(CopulaFamily::StudentT { nu })
    }

    pub fn is_archimedean(&self) -> bool {
        matches!(self, CopulaFamily::Clayton | CopulaFamily::Gumbel | CopulaFamily::Frank)
    }

    /// Range of Kendall's tau this family can attain (closed where attained).
    pub fn tau_range(&self) -> (f64, f64) {
        match self {
            CopulaFamily::Gumbel => (0.0, 1.0),
            _ => (-1.0, 1.0),
        }
    }

    /// Check that `theta` lies in the family's parameter space.
    pub fn validate_theta(&self, theta: f64) -> Result<()> {
        let ok = theta.is_finite()
            && match self {
                CopulaFamily::Clayton => theta > -1.0 && theta != 0.0,
                CopulaFamily::Gumbel => theta >= 1.0,
                CopulaFamily::Frank => theta != 0.0,
                CopulaFamily::Gaussian => (-1.0..=1.0).contains(&theta),
                CopulaFamily::StudentT { nu } => (-1.0..=1.0).contains(&theta) && *nu > 1.0 && nu.is_finite(),
            };
        if ok {
            Ok(())
        } else {
            let space = match self {
                CopulaFamily::Clayton => "(-1, inf) \\ {0}",
                CopulaFamily::Gumbel => "[1, inf)",
                CopulaFamily::Frank => "(-inf, inf) \\ {0}",
                CopulaFamily::Gaussian | CopulaFamily::StudentT { .. } => "[-1, 1]",
            };
            Err(Error::ParameterDomain(format!("{self} parameter {theta} outside {space}")))
        }
    }

    /// Kendall's tau implied by `theta`. Clayton and Frank accept `theta = 0`
    /// as the independence limit.
    pub(crate) fn tau_of(&self, theta: f64) -> f64 {
        match self {
            CopulaFamily::Clayton => theta / (theta + 2.0),
            CopulaFamily::Gumbel => (theta - 1.0) / theta,
            CopulaFamily::Frank => frank_tau(theta),
            CopulaFamily::Gaussian | CopulaFamily::StudentT { .. } => FRAC_2_PI * theta.asin(),
        }
    }

    /// Invert the Kendall's tau map. Clayton and Frank return the independence
    /// limit `theta = 0` at `tau = 0`.
    pub fn theta_from_tau(&self, tau: f64) -> Result<f64> {
        let (lo, hi) = self.tau_range();
        let attainable = tau.is_finite()
            && match self {
                CopulaFamily::Gumbel => (lo..hi).contains(&tau),
                CopulaFamily::Gaussian | CopulaFamily::StudentT { .. } => (lo..=hi).contains(&tau),
                _ => tau > lo && tau < hi,
            };
        if !attainable {
            return Err(Error::Domain(format!("Kendall's tau {tau} is not attainable by the {self} family")));
        }
        Ok(match self {
            CopulaFamily::Clayton => 2.0 * tau / (1.0 - tau),
            CopulaFamily::Gumbel => 1.0 / (1.0 - tau),
            CopulaFamily::Frank => frank_theta(tau)?,
            CopulaFamily::Gaussian | CopulaFamily::StudentT { .. } => (FRAC_PI_2 * tau).sin(),
        })
    }
}

impl fmt::Display for CopulaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CopulaFamily::Clayton => write!(f, "clayton"),
            CopulaFamily::Gumbel => write!(f, "gumbel"),
            CopulaFamily::Frank => write!(f, "frank"),
            CopulaFamily::Gaussian => write!(f, "gaussian"),
            CopulaFamily::StudentT { nu } => write!(f, "t{nu}"),
        }
    }
}

impl FromStr for CopulaFamily {
    type Err = Error;

    /// Accepts `clayton`, `gumbel`, `frank`, `gaussian` (or `normal`) and
    /// `t<nu>` / `t:<nu>` / `student_t:<nu>` for the t copula.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "clayton" => Ok(CopulaFamily::Clayton),
            "gumbel" => Ok(CopulaFamily::Gumbel),
            "frank" => Ok(CopulaFamily::Frank),
            "gaussian" | "normal" => Ok(CopulaFamily::Gaussian),
            other => {
                let nu = other
                    .strip_prefix("student_t:")
                    .or_else(|| other.strip_prefix("t:"))
                    .or_else(|| other.strip_prefix('t'))
                    .ok_or_else(|| Error::Parse(format!("unknown copula family '{s}'")))?;
                let nu: f64 = nu
                    .parse()
                    .map_err(|_| Error::Parse(format!("invalid Student-t degrees of freedom in '{s}'")))?;
                CopulaFamily::student_t(nu)
            }
        }
    }
}

impl TryFrom<String> for CopulaFamily {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CopulaFamily> for String {
    fn from(f: CopulaFamily) -> String {
        f.to_string()
    }
}

fn frank_tau(theta: f64) -> f64 {
    if theta.abs() < 0.1 {
        let t2 = theta * theta;
        theta * (1.0 / 9.0 - t2 * (1.0 / 900.0 - t2 / 52_920.0))
    } else {
        1.0 + 4.0 / theta * (debye1(theta) - 1.0)
    }
}

fn frank_theta(tau: f64) -> Result<f64> {
    if tau == 0.0 {
        return Ok(0.0);
    }
    let target = tau.abs();
    let mut hi: f64 = 10.0;
    while frank_tau(hi) < target {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Numeric(format!("cannot bracket Frank parameter for tau = {tau}")));
        }
    }
    let root = brent_root(|t| frank_tau(t) - target, 0.0, hi, 1e-13 * hi, 200)?;
    Ok(root.copysign(tau))
}

/// A point of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitPair {
    pub u: f64,
    pub v: f64,
}

impl UnitPair {
    pub fn new(u: f64, v: f64) -> Result<Self> {
        if !((0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v)) {
            return Err(Error::Domain(format!("({u}, {v}) is outside the unit square")));
        }
        Ok(UnitPair { u, v })
    }

    pub fn is_interior(&self) -> bool {
        self.u > 0.0 && self.u < 1.0 && self.v > 0.0 && self.v < 1.0
    }

    pub fn swapped(&self) -> Self {
        UnitPair { u: self.v, v: self.u }
    }
}

/// Density value, clamped at [`DENSITY_CEILING`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Density {
    pub value: f64,
    /// True when the unclamped density exceeded the ceiling.
    pub saturated: bool,
}

/// A copula family together with a dependence parameter in its parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaSpec {
    family: CopulaFamily,
    theta: f64,
}

impl CopulaSpec {
    pub fn new(family: CopulaFamily, theta: f64) -> Result<Self> {
        if let CopulaFamily::StudentT { nu } = family {
            CopulaFamily::student_t(nu)?;
        }
        family.validate_theta(theta)?;
        Ok(CopulaSpec { family, theta })
    }

    /// Spec at a parameter reached by the tau-space search, where Clayton and
    /// Frank may sit at the `theta = 0` independence limit.
    pub(crate) fn new_limit(family: CopulaFamily, theta: f64) -> Self {
        CopulaSpec { family, theta }
    }

    /// Build a spec from a Kendall's tau value.
    pub fn from_tau(family: CopulaFamily, tau: f64) -> Result<Self> {
        let theta = family.theta_from_tau(tau)?;
        if theta == 0.0 {
            return Err(Error::ParameterDomain(format!(
                "tau = 0 maps to the excluded independence point of the {family} family"
            )));
        }
        CopulaSpec::new(family, theta)
    }

    pub fn family(&self) -> CopulaFamily {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Kendall's tau implied by the parameter.
    pub fn kendall_tau(&self) -> f64 {
        self.family.tau_of(self.theta)
    }

    /// Copula CDF `C(u, v; theta)`.
    pub fn cdf(&self, p: UnitPair) -> Result<f64> {
        let UnitPair { u, v } = UnitPair::new(p.u, p.v)?;
        if u == 0.0 || v == 0.0 {
            return Ok(0.0);
        }
        if u == 1.0 {
            return Ok(v);
        }
        if v == 1.0 {
            return Ok(u);
        }
        let theta = self.theta;
        let c = match self.family {
            CopulaFamily::Clayton => clayton::cdf(theta, u, v),
            CopulaFamily::Gumbel => gumbel::cdf(theta, u, v),
            CopulaFamily::Frank => frank::cdf(theta, u, v),
            CopulaFamily::Gaussian => {
                if theta >= 1.0 {
                    u.min(v)
                } else if theta <= -1.0 {
                    (u + v - 1.0).max(0.0)
                } else {
                    elliptical::bvn_cdf(norm_quantile(u), norm_quantile(v), theta)?
                }
            }
            CopulaFamily::StudentT { nu } => {
                if theta >= 1.0 {
                    u.min(v)
                } else if theta <= -1.0 {
                    (u + v - 1.0).max(0.0)
                } else {
                    elliptical::bvt_cdf(t_quantile(u, nu), t_quantile(v, nu), theta, nu)?
                }
            }
        };
        if !c.is_finite() {
            return Err(Error::Numeric(format!("non-finite {} CDF at ({u}, {v}), theta = {theta}", self.family)));
        }
        // Frechet-Hoeffding bounds absorb rounding at the corners.
        Ok(c.clamp((u + v - 1.0).max(0.0), u.min(v)))
    }

    /// Copula density on the open unit square.
    pub fn pdf(&self, p: UnitPair) -> Result<Density> {
        if !p.is_interior() {
            return Err(Error::Domain(format!("copula density requires (u, v) in (0,1)^2, got ({}, {})", p.u, p.v)));
        }
        if matches!(self.family, CopulaFamily::Gaussian | CopulaFamily::StudentT { .. }) && self.theta.abs() >= 1.0 {
            return Err(Error::Domain(format!("{} copula with |theta| = 1 is singular", self.family)));
        }
        let prepared = PreparedPoints::new(self.family, std::slice::from_ref(&p));
        let raw = prepared.ln_pdf(self.theta, 0).exp();
        Ok(if raw > DENSITY_CEILING || raw.is_nan() {
            Density { value: DENSITY_CEILING, saturated: true }
        } else {
            Density { value: raw, saturated: false }
        })
    }

    /// Draw `n` i.i.d. pairs; deterministic for a given seed.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<UnitPair>> {
        if n == 0 {
            return Err(Error::Contract("sample size must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Result<UnitPair> {
        let theta = self.theta;
        let (u, v) = match self.family {
            CopulaFamily::Clayton => {
                let u: f64 = rng.sample(Open01);
                let w: f64 = rng.sample(Open01);
                (u, clayton::cond_inverse(theta, u, w))
            }
            CopulaFamily::Frank => {
                let u: f64 = rng.sample(Open01);
                let w: f64 = rng.sample(Open01);
                (u, frank::cond_inverse(theta, u, w))
            }
            CopulaFamily::Gumbel => {
                let u: f64 = rng.sample(Open01);
                let w: f64 = rng.sample(Open01);
                let v = if theta == 1.0 {
                    w
                } else {
                    brent_root(|v| gumbel::cond_cdf(theta, u, v) - w, 0.0, 1.0, 1e-10, 200)?
                };
                (u, v)
            }
            CopulaFamily::Gaussian => {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let x2 = theta * z1 + (1.0 - theta * theta).max(0.0).sqrt() * z2;
                (norm_cdf(z1), norm_cdf(x2))
            }
            CopulaFamily::StudentT { nu } => {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let chi = ChiSquared::new(nu).map_err(|e| Error::ParameterDomain(e.to_string()))?;
                let w: f64 = chi.sample(rng);
                let scale = (nu / w).sqrt();
                let x2 = theta * z1 + (1.0 - theta * theta).max(0.0).sqrt() * z2;
                (t_cdf(z1 * scale, nu), t_cdf(x2 * scale, nu))
            }
        };
        Ok(UnitPair { u, v: v.clamp(0.0, 1.0) })
    }
}

impl fmt::Display for CopulaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(theta = {})", self.family, self.theta)
    }
}

/// Per-observation transforms for fast log-density evaluation over many
/// parameter values.
#[derive(Debug, Clone)]
pub struct PreparedPoints {
    family: CopulaFamily,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
    t_consts: Option<elliptical::TConstants>,
}

impl PreparedPoints {
    /// Points must lie in the open unit square.
    pub fn new(family: CopulaFamily, points: &[UnitPair]) -> Self {
        let n = points.len();
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        let mut c = Vec::new();
        let mut d = Vec::new();
        let mut t_consts = None;
        match family {
            CopulaFamily::Clayton => {
                for p in points {
                    a.push(p.u.ln());
                    b.push(p.v.ln());
                }
            }
            CopulaFamily::Gumbel => {
                for p in points {
                    let (lu, lv) = (p.u.ln(), p.v.ln());
                    a.push(lu);
                    b.push(lv);
                    c.push((-lu).ln());
                    d.push((-lv).ln());
                }
            }
            CopulaFamily::Frank => {
                for p in points {
                    a.push(p.u);
                    b.push(p.v);
                }
            }
            CopulaFamily::Gaussian => {
                for p in points {
                    a.push(norm_quantile(p.u));
                    b.push(norm_quantile(p.v));
                }
            }
            CopulaFamily::StudentT { nu } => {
                let k = elliptical::TConstants::new(nu);
                for p in points {
                    let s = t_quantile(p.u, nu);
                    let t = t_quantile(p.v, nu);
                    a.push(s);
                    b.push(t);
                    c.push(k.ln_marginal(s));
                    d.push(k.ln_marginal(t));
                }
                t_consts = Some(k);
            }
        }
        PreparedPoints { family, a, b, c, d, t_consts }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn family(&self) -> CopulaFamily {
        self.family
    }

    /// Unclamped log-density at point `i` (may be `-inf` outside a Clayton support).
    #[inline]
    pub fn ln_pdf(&self, theta: f64, i: usize) -> f64 {
        match self.family {
            CopulaFamily::Clayton => clayton::ln_pdf(theta, self.a[i], self.b[i]),
            CopulaFamily::Gumbel => gumbel::ln_pdf(theta, self.a[i], self.b[i], self.c[i], self.d[i]),
            CopulaFamily::Frank => frank::ln_pdf(theta, self.a[i], self.b[i]),
            CopulaFamily::Gaussian => elliptical::gaussian_ln_pdf(theta, self.a[i], self.b[i]),
            CopulaFamily::StudentT { .. } => {
                let k = self.t_consts.as_ref().expect("t constants are set for the t family");
                k.ln_pdf(theta, self.a[i], self.b[i], self.c[i], self.d[i])
            }
        }
    }

    /// Density at point `i`, clamped to `[0, DENSITY_CEILING]`.
    #[inline]
    pub fn pdf_clamped(&self, theta: f64, i: usize) -> f64 {
        let v = self.ln_pdf(theta, i).exp();
        if v.is_nan() {
            DENSITY_CEILING
        } else {
            v.min(DENSITY_CEILING)
        }
    }
}

#[cfg(test)]
mod tests;
