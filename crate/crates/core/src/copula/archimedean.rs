//! Clayton, Gumbel and Frank copulas: CDFs, log-densities and conditional
//! distributions. All functions expect `u, v` strictly inside (0, 1); callers
//! handle the boundary.

/// `ln(e^a + e^b - 1)` for `a, b >= 0` without overflow.
fn ln_sum_exp_minus_one(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m < 1.0 {
        (a.exp_m1() + b.exp_m1()).ln_1p()
    } else {
        m + ((a - m).exp() + (b - m).exp() - (-m).exp()).ln()
    }
}

pub(crate) fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub(crate) mod clayton {
    use super::ln_sum_exp_minus_one;

    pub fn cdf(theta: f64, u: f64, v: f64) -> f64 {
        if theta == 0.0 {
            return u * v;
        }
        if theta > 0.0 {
            let l = ln_sum_exp_minus_one(-theta * u.ln(), -theta * v.ln());
            (-l / theta).exp()
        } else {
            let base = 1.0 + (-theta * u.ln()).exp_m1() + (-theta * v.ln()).exp_m1();
            if base <= 0.0 {
                0.0
            } else {
                base.powf(-1.0 / theta)
            }
        }
    }

    /// Log density from cached `ln u`, `ln v`.
    pub fn ln_pdf(theta: f64, lu: f64, lv: f64) -> f64 {
        if theta == 0.0 {
            return 0.0;
        }
        let l = if theta > 0.0 {
            ln_sum_exp_minus_one(-theta * lu, -theta * lv)
        } else {
            let base = 1.0 + (-theta * lu).exp_m1() + (-theta * lv).exp_m1();
            if base <= 0.0 {
                return f64::NEG_INFINITY;
            }
            base.ln()
        };
        theta.ln_1p() - (theta + 1.0) * (lu + lv) + (-1.0 / theta - 2.0) * l
    }

    /// Inverse of the conditional distribution `v -> dC/du (u, v)` at level `w`.
    pub fn cond_inverse(theta: f64, u: f64, w: f64) -> f64 {
        if theta == 0.0 {
            return w;
        }
        let e = -theta / (1.0 + theta);
        if theta > 0.0 {
            // v = (1 + u^-theta (w^e - 1))^(-1/theta), evaluated in log space.
            let p = -theta * u.ln();
            let q = (e * w.ln()).exp_m1().ln();
            let z = p + q;
            let softplus = if z > 35.0 { z + (-z).exp() } else { z.exp().ln_1p() };
            (-softplus / theta).exp()
        } else {
            let base = 1.0 + (-theta * u.ln()).exp() * (e * w.ln()).exp_m1();
            base.max(0.0).powf(-1.0 / theta)
        }
    }
}

pub(crate) mod gumbel {
    use super::logaddexp;

    /// `ln A` where `A = (-ln u)^theta + (-ln v)^theta`, from cached `ln(-ln u)`, `ln(-ln v)`.
    fn ln_a(theta: f64, llu: f64, llv: f64) -> f64 {
        logaddexp(theta * llu, theta * llv)
    }

    pub fn cdf(theta: f64, u: f64, v: f64) -> f64 {
        let la = ln_a(theta, (-u.ln()).ln(), (-v.ln()).ln());
        (-(la / theta).exp()).exp()
    }

    /// Log density from cached `ln u`, `ln v`, `ln(-ln u)`, `ln(-ln v)`.
    pub fn ln_pdf(theta: f64, lu: f64, lv: f64, llu: f64, llv: f64) -> f64 {
        if theta == 1.0 {
            return 0.0;
        }
        let la = ln_a(theta, llu, llv);
        let w = (la / theta).exp();
        -w + (theta - 1.0) * (llu + llv) - lu - lv + (2.0 / theta - 2.0) * la + ((theta - 1.0) / w).ln_1p()
    }

    /// Conditional distribution `dC/du (u, v)`.
    pub fn cond_cdf(theta: f64, u: f64, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        if v >= 1.0 {
            return 1.0;
        }
        let lu = u.ln();
        let llu = (-lu).ln();
        let llv = (-v.ln()).ln();
        let la = ln_a(theta, llu, llv);
        let w = (la / theta).exp();
        (-w + (1.0 / theta - 1.0) * la + (theta - 1.0) * llu - lu).exp()
    }
}

pub(crate) mod frank {
    /// Frank CDF for any nonzero `theta`.
    pub fn cdf(theta: f64, u: f64, v: f64) -> f64 {
        if theta == 0.0 {
            return u * v;
        }
        let num = (-theta * u).exp_m1() * (-theta * v).exp_m1();
        -(num / (-theta).exp_m1()).ln_1p() / theta
    }

    pub fn ln_pdf(theta: f64, u: f64, v: f64) -> f64 {
        if theta.abs() < 1e-12 {
            return 0.0;
        }
        if theta < 0.0 {
            return ln_pdf(-theta, u, 1.0 - v);
        }
        let s = (0.25 * theta * (u - v)).sinh();
        let b = 0.5 * theta * (u + v);
        let denom = 4.0 * s * s - (-b).exp_m1() - (-(theta - b)).exp_m1();
        theta.ln() + (-(-theta).exp_m1()).ln() - 2.0 * denom.ln()
    }

    pub fn cond_inverse(theta: f64, u: f64, w: f64) -> f64 {
        if theta.abs() < 1e-12 {
            return w;
        }
        use super::logaddexp;
        let lw = w.ln();
        let l1w = (-w).ln_1p();
        let num = logaddexp(lw - theta, l1w - theta * u);
        let den = logaddexp(lw, l1w - theta * u);
        -(num - den) / theta
    }
}
