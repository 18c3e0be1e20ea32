//! Gaussian and Student-t copulas.
//!
//! The bivariate CDFs are reduced to a single integral of the conditional
//! distribution of the second coordinate given the first,
//! `F(h, k) = int_{-inf}^{h} f(x) P(Y <= k | X = x) dx`,
//! evaluated by adaptive Gauss-Kronrod quadrature after mapping the half line
//! onto `[0, 1)`.

use std::f64::consts::PI;

use crate::error::Result;
use crate::quadrature;
use crate::special::{norm_cdf, norm_pdf, t_cdf, t_ln_norm, t_pdf};

const GAUSS_TOL: f64 = 1e-13;
const T_TOL: f64 = 1e-10;

/// Integrate `g` over `(-inf, h]` through `x = h - s / (1 - s)`.
fn lower_half_line<G: Fn(f64) -> f64>(g: G, h: f64, tol: f64) -> Result<f64> {
    let mapped = |s: f64| {
        let one_minus = 1.0 - s;
        let x = h - s / one_minus;
        let val = g(x) / (one_minus * one_minus);
        if val.is_finite() {
            val
        } else {
            0.0
        }
    };
    quadrature::integrate(mapped, 0.0, 1.0, tol, 0.0).map(|r| r.value)
}

/// Integrate `g` over `[h, inf)` through `x = h + s / (1 - s)`.
fn upper_half_line<G: Fn(f64) -> f64>(g: G, h: f64, tol: f64) -> Result<f64> {
    lower_half_line(|x| g(-x), -h, tol)
}

/// Standard bivariate normal CDF with correlation `rho`, `|rho| < 1`.
pub fn bvn_cdf(h: f64, k: f64, rho: f64) -> Result<f64> {
    if h == f64::NEG_INFINITY || k == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if h == f64::INFINITY {
        return Ok(norm_cdf(k));
    }
    if k == f64::INFINITY {
        return Ok(norm_cdf(h));
    }
    if rho == 0.0 {
        return Ok(norm_cdf(h) * norm_cdf(k));
    }
    let sigma = (1.0 - rho * rho).sqrt();
    let cond = |x: f64| norm_pdf(x) * norm_cdf((k - rho * x) / sigma);
    let value = if h <= 0.0 {
        lower_half_line(cond, h, GAUSS_TOL)?
    } else {
        norm_cdf(k) - upper_half_line(cond, h, GAUSS_TOL)?
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Standard bivariate Student-t CDF with correlation `rho` and `nu` degrees of freedom.
pub fn bvt_cdf(h: f64, k: f64, rho: f64, nu: f64) -> Result<f64> {
    if h == f64::NEG_INFINITY || k == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if h == f64::INFINITY {
        return Ok(t_cdf(k, nu));
    }
    if k == f64::INFINITY {
        return Ok(t_cdf(h, nu));
    }
    let one_m_rho2 = 1.0 - rho * rho;
    // Y | X = x is t with nu + 1 degrees of freedom, location rho x and
    // squared scale (nu + x^2)(1 - rho^2) / (nu + 1).
    let cond = |x: f64| {
        let scale = ((nu + x * x) * one_m_rho2 / (nu + 1.0)).sqrt();
        t_pdf(x, nu) * t_cdf((k - rho * x) / scale, nu + 1.0)
    };
    let value = if h <= 0.0 {
        lower_half_line(cond, h, T_TOL)?
    } else {
        t_cdf(k, nu) - upper_half_line(cond, h, T_TOL)?
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Gaussian copula log-density in normal-score coordinates.
#[inline]
pub fn gaussian_ln_pdf(rho: f64, s: f64, t: f64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    let one_m = 1.0 - rho * rho;
    -0.5 * one_m.ln() - (rho * rho * (s * s + t * t) - 2.0 * rho * s * t) / (2.0 * one_m)
}

/// Precomputed constants of the t copula density for fixed `nu`.
#[derive(Debug, Clone, Copy)]
pub struct TConstants {
    pub nu: f64,
    /// `ln Gamma((nu+2)/2) - ln Gamma(nu/2) - ln(nu pi)`.
    pub ln_norm2: f64,
    /// Univariate normalizing constant.
    pub ln_norm1: f64,
}

impl TConstants {
    pub fn new(nu: f64) -> Self {
        let ln_norm2 = crate::special::ln_gamma(0.5 * (nu + 2.0)) - crate::special::ln_gamma(0.5 * nu) - (nu * PI).ln();
        TConstants { nu, ln_norm2, ln_norm1: t_ln_norm(nu) }
    }

    /// Univariate t log-density at `x`.
    #[inline]
    pub fn ln_marginal(&self, x: f64) -> f64 {
        self.ln_norm1 - 0.5 * (self.nu + 1.0) * (x * x / self.nu).ln_1p()
    }

    /// Copula log-density given t-scores and their marginal log-densities.
    #[inline]
    pub fn ln_pdf(&self, rho: f64, s: f64, t: f64, ln_ms: f64, ln_mt: f64) -> f64 {
        let one_m = 1.0 - rho * rho;
        let q = (s * s - 2.0 * rho * s * t + t * t) / (self.nu * one_m);
        self.ln_norm2 - 0.5 * one_m.ln() - 0.5 * (self.nu + 2.0) * q.ln_1p() - ln_ms - ln_mt
    }
}
