//! Local likelihood probit-transformation (LLPT) copula density estimation.
//!
//! Pseudo-observations are mapped to the plane by `Phi^-1` and the log-density
//! of the transformed sample is fitted locally by a quadratic polynomial
//! `P_a(z) = a0 + a1 z1 + a2 z2 + a3 z1^2 + a4 z2^2 + a5 z1 z2` under a
//! product Gaussian kernel with standard deviation `b`. The copula density is
//! then `exp(a0) / (phi(s) phi(t))`.
//!
//! With a Gaussian kernel the penalty term
//! `int K_b(z) exp(P_a(z)) dz` is a Gaussian integral whenever
//! `M = I / b^2 - Q` is positive definite (`Q` the Hessian of `P_a`), and its
//! derivatives with respect to `a` are moments of the normal law
//! `N(M^-1 g, M^-1)`. Those moments involve polynomials of total degree at
//! most four, so a three-point tensor Gauss-Hermite rule evaluates them exactly.

use nalgebra::{Matrix6, Vector6};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{UnitPair, DENSITY_CEILING};
use crate::empirical::PseudoSample;
use crate::error::{Error, Result};
use crate::quadrature::gauss_hermite;
use crate::special::{norm_ln_pdf, norm_quantile};

/// Default nearest-neighbour fraction.
pub const DEFAULT_K_FRAC: f64 = 0.3;
/// Lower bound on the bandwidth.
pub const MIN_BANDWIDTH: f64 = 0.1;
const MAX_NEWTON_ITER: usize = 100;
const GRAD_TOL: f64 = 1e-8;
const GH_GRID: usize = 32;

/// Sample mapped to the plane by the standard normal quantile.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbitPoints {
    points: Vec<[f64; 2]>,
}

impl ProbitPoints {
    /// Wrap points already in probit coordinates.
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::Domain("probit points must be finite".into()));
        }
        Ok(ProbitPoints { points })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Kernel bandwidth (standard deviation of each kernel coordinate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub b: f64,
    pub k_frac: f64,
    /// When set, each evaluation point uses its own nearest-neighbour distance.
    pub per_point: bool,
}

impl Bandwidth {
    pub fn fixed(b: f64) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::ParameterDomain(format!("bandwidth must be positive, got {b}")));
        }
        Ok(Bandwidth { b, k_frac: f64::NAN, per_point: false })
    }
}

/// Result of one local log-quadratic fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalFit {
    pub a: [f64; 6],
    pub converged: bool,
    pub iterations: usize,
}

impl LocalFit {
    /// Estimated density of the probit sample at the evaluation point.
    pub fn density(&self) -> f64 {
        self.a[0].exp()
    }
}

/// LLPT copula density values at a list of query points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlptEstimate {
    values: Vec<f64>,
    converged: Vec<bool>,
    pub bandwidth: Bandwidth,
    pub n: usize,
}

impl LlptEstimate {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn converged(&self) -> &[bool] {
        &self.converged
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn probit_transform(ps: &PseudoSample) -> Result<ProbitPoints> {
    let mut points = Vec::with_capacity(ps.len());
    for p in ps.points() {
        points.push(probit(*p)?);
    }
    Ok(ProbitPoints { points })
}

fn probit(p: UnitPair) -> Result<[f64; 2]> {
    if !p.is_interior() {
        return Err(Error::Domain(format!("probit transform needs (u, v) in (0,1)^2, got ({}, {})", p.u, p.v)));
    }
    Ok([norm_quantile(p.u), norm_quantile(p.v)])
}

fn dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Distance from `at` to its `k`-th nearest point of `pts`, skipping index `skip`.
fn kth_distance(pts: &[[f64; 2]], at: &[f64; 2], k: usize, skip: Option<usize>) -> f64 {
    let mut d: Vec<f64> = pts.iter().enumerate().filter(|(j, _)| Some(*j) != skip).map(|(_, q)| dist(at, q)).collect();
    let k = k.clamp(1, d.len());
    let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

fn k_of(k_frac: f64, n: usize) -> usize {
    ((k_frac * n as f64).ceil() as usize).clamp(1, n.saturating_sub(1).max(1))
}

fn validate_k_frac(k_frac: f64) -> Result<()> {
    if !(k_frac > 0.0 && k_frac <= 1.0) {
        return Err(Error::ParameterDomain(format!("k_frac must lie in (0, 1], got {k_frac}")));
    }
    Ok(())
}

/// Median over points of the distance to the `ceil(k_frac n)`-th nearest other
/// point, without the floor or the minimum sample size of [`nn_bandwidth`].
pub fn median_knn_distance(pts: &ProbitPoints, k_frac: f64) -> Result<f64> {
    validate_k_frac(k_frac)?;
    let p = pts.points();
    if p.len() < 2 {
        return Err(Error::InsufficientData("nearest-neighbour distance needs at least 2 points".into()));
    }
    if p.iter().all(|q| q == &p[0]) {
        return Err(Error::DegenerateData("all probit points coincide".into()));
    }
    let k = k_of(k_frac, p.len());
    let mut d: Vec<f64> = (0..p.len()).into_par_iter().map(|i| kth_distance(p, &p[i], k, Some(i))).collect();
    d.sort_by(f64::total_cmp);
    let m = d.len();
    Ok(if m % 2 == 1 { d[m / 2] } else { 0.5 * (d[m / 2 - 1] + d[m / 2]) })
}

/// Nearest-neighbour bandwidth, floored at [`MIN_BANDWIDTH`].
pub fn nn_bandwidth(pts: &ProbitPoints, k_frac: f64) -> Result<Bandwidth> {
    validate_k_frac(k_frac)?;
    if pts.len() < 10 {
        return Err(Error::InsufficientData(format!("nearest-neighbour bandwidth needs n >= 10, got {}", pts.len())));
    }
    let b = median_knn_distance(pts, k_frac)?.max(MIN_BANDWIDTH);
    Ok(Bandwidth { b, k_frac, per_point: false })
}

/// Evaluation-point bandwidth: the global value, or the local neighbour distance.
fn bandwidth_at(pts: &ProbitPoints, at: &[f64; 2], bw: &Bandwidth) -> f64 {
    if bw.per_point && bw.k_frac.is_finite() {
        kth_distance(pts.points(), at, k_of(bw.k_frac, pts.len() + 1), None).max(MIN_BANDWIDTH)
    } else {
        bw.b
    }
}

fn features(z: [f64; 2]) -> Vector6<f64> {
    Vector6::new(1.0, z[0], z[1], z[0] * z[0], z[1] * z[1], z[0] * z[1])
}

/// Value, first and second derivatives of the penalty `int K_b exp(P_a)`.
struct Penalty {
    value: f64,
    mean_features: Vector6<f64>,
    second_moments: Matrix6<f64>,
}

struct LocalProblem {
    b: f64,
    /// `(1/n) sum_i K_b(d_i) phi(d_i)`.
    data: Vector6<f64>,
    rule3: [(f64, f64); 3],
}

impl LocalProblem {
    fn new(pts: &ProbitPoints, at: [f64; 2], b: f64) -> Self {
        let n = pts.len() as f64;
        let norm = 1.0 / (2.0 * std::f64::consts::PI * b * b);
        let mut data = Vector6::zeros();
        for p in pts.points() {
            let d = [p[0] - at[0], p[1] - at[1]];
            let w = norm * (-(d[0] * d[0] + d[1] * d[1]) / (2.0 * b * b)).exp();
            if w > 0.0 {
                data += features(d) * w;
            }
        }
        data /= n;
        let (x, w) = gauss_hermite(3);
        let s = std::f64::consts::PI.sqrt();
        let rule3 = [
            (x[0] * std::f64::consts::SQRT_2, w[0] / s),
            (x[1] * std::f64::consts::SQRT_2, w[1] / s),
            (x[2] * std::f64::consts::SQRT_2, w[2] / s),
        ];
        LocalProblem { b, data, rule3 }
    }

    /// `M = I / b^2 - Q` as `(m11, m12, m22)`, if positive definite.
    fn precision(&self, a: &Vector6<f64>) -> Option<(f64, f64, f64)> {
        let ib2 = 1.0 / (self.b * self.b);
        let (m11, m12, m22) = (ib2 - 2.0 * a[3], -a[5], ib2 - 2.0 * a[4]);
        let det = m11 * m22 - m12 * m12;
        (m11 > 0.0 && det > 0.0 && det.is_finite()).then_some((m11, m12, m22))
    }

    /// Closed-form penalty and its Gaussian moments when `M` is positive definite.
    fn penalty(&self, a: &Vector6<f64>) -> Option<Penalty> {
        let (m11, m12, m22) = self.precision(a)?;
        let det = m11 * m22 - m12 * m12;
        // Sigma = M^-1.
        let (s11, s12, s22) = (m22 / det, -m12 / det, m11 / det);
        let mu = [s11 * a[1] + s12 * a[2], s12 * a[1] + s22 * a[2]];
        let ln_value = a[0] - 2.0 * self.b.ln() - 0.5 * det.ln() + 0.5 * (a[1] * mu[0] + a[2] * mu[1]);
        let value = ln_value.exp();
        if !value.is_finite() {
            return None;
        }
        // Cholesky of Sigma.
        let l11 = s11.sqrt();
        let l21 = s12 / l11;
        let l22 = (s22 - l21 * l21).max(0.0).sqrt();
        let mut mean_features = Vector6::zeros();
        let mut second_moments = Matrix6::zeros();
        for &(x, wx) in &self.rule3 {
            for &(y, wy) in &self.rule3 {
                let z = [mu[0] + l11 * x, mu[1] + l21 * x + l22 * y];
                let f = features(z);
                let w = wx * wy;
                mean_features += f * w;
                second_moments += f * f.transpose() * w;
            }
        }
        Some(Penalty { value, mean_features, second_moments })
    }

    /// Penalty by a 32 x 32 tensor Gauss-Hermite rule on the kernel measure.
    /// Used when `M` is not positive definite, where the exact integral diverges
    /// and this value is only a finite surrogate.
    fn penalty_grid(&self, a: &Vector6<f64>) -> f64 {
        let (x, w) = gauss_hermite(GH_GRID);
        let scale = std::f64::consts::SQRT_2 * self.b;
        let mut total = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            for (yj, wj) in x.iter().zip(&w) {
                let z = [scale * xi, scale * yj];
                total += wi * wj * features(z).dot(a).exp();
            }
        }
        total / std::f64::consts::PI
    }

    fn objective(&self, a: &Vector6<f64>) -> f64 {
        let pen = match self.penalty(a) {
            Some(p) => p.value,
            None => {
                if self.precision(a).is_some() {
                    f64::INFINITY
                } else {
                    self.penalty_grid(a)
                }
            }
        };
        self.data.dot(a) - pen
    }
}

/// Maximize the local likelihood at `at` by damped Newton iterations.
pub fn local_fit(pts: &ProbitPoints, at: [f64; 2], bw: &Bandwidth) -> Result<LocalFit> {
    if !(bw.b.is_finite() && bw.b > 0.0) {
        return Err(Error::ParameterDomain(format!("bandwidth must be positive, got {}", bw.b)));
    }
    if pts.is_empty() {
        return Err(Error::InsufficientData("local fit needs at least one point".into()));
    }
    let b = bandwidth_at(pts, &at, bw);
    let problem = LocalProblem::new(pts, at, b);

    let pilot = pilot_density(pts, at);
    if problem.data[0] <= 0.0 || pilot <= 0.0 {
        // No kernel mass reaches this point: the estimate is zero.
        return Ok(LocalFit { a: [f64::NEG_INFINITY, 0.0, 0.0, 0.0, 0.0, 0.0], converged: false, iterations: 0 });
    }
    let mut a = Vector6::new(pilot.ln(), 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut value = problem.objective(&a);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_NEWTON_ITER {
        let Some(pen) = problem.penalty(&a) else { break };
        let grad = problem.data - pen.mean_features * pen.value;
        if grad.amax() <= GRAD_TOL {
            converged = true;
            break;
        }
        iterations += 1;
        let neg_hess = pen.second_moments * pen.value;
        let step = match neg_hess.cholesky() {
            Some(ch) => ch.solve(&grad),
            None => grad,
        };
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = a + step * t;
            if problem.penalty(&trial).is_some() {
                let v = problem.objective(&trial);
                if v.is_finite() && v >= value + 1e-4 * t * slope {
                    a = trial;
                    value = v;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !converged {
        if let Some(pen) = problem.penalty(&a) {
            converged = (problem.data - pen.mean_features * pen.value).amax() <= GRAD_TOL;
        }
    }
    Ok(LocalFit { a: [a[0], a[1], a[2], a[3], a[4], a[5]], converged, iterations })
}

/// Fixed-bandwidth Gaussian kernel density estimate with `b = n^(-1/6)`.
fn pilot_density(pts: &ProbitPoints, at: [f64; 2]) -> f64 {
    let n = pts.len() as f64;
    let b = n.powf(-1.0 / 6.0);
    let norm = 1.0 / (2.0 * std::f64::consts::PI * b * b);
    let s: f64 = pts
        .points()
        .iter()
        .map(|p| {
            let (dx, dy) = (p[0] - at[0], p[1] - at[1]);
            (-(dx * dx + dy * dy) / (2.0 * b * b)).exp()
        })
        .sum();
    norm * s / n
}

/// LLPT copula density at each query point, bandwidth chosen by nearest neighbours.
pub fn llpt_density(ps: &PseudoSample, query: &[UnitPair], k_frac: f64) -> Result<LlptEstimate> {
    let pts = probit_transform(ps)?;
    let bw = nn_bandwidth(&pts, k_frac)?;
    llpt_density_with(&pts, query, bw)
}

/// LLPT copula density at each query point with a given bandwidth.
pub fn llpt_density_with(pts: &ProbitPoints, query: &[UnitPair], bw: Bandwidth) -> Result<LlptEstimate> {
    let at: Vec<[f64; 2]> = query.iter().map(|q| probit(*q)).collect::<Result<_>>()?;
    let fits: Vec<LocalFit> = at.par_iter().map(|x| local_fit(pts, *x, &bw)).collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(fits.len());
    let mut converged = Vec::with_capacity(fits.len());
    for (fit, x) in fits.iter().zip(&at) {
        values.push(copula_density_from_fit(fit, *x));
        converged.push(fit.converged);
    }
    Ok(LlptEstimate { values, converged, bandwidth: bw, n: pts.len() })
}

/// `exp(a0) / (phi(s) phi(t))`, clamped to `[0, DENSITY_CEILING]`.
pub fn copula_density_from_fit(fit: &LocalFit, at: [f64; 2]) -> f64 {
    let v = (fit.a[0] - norm_ln_pdf(at[0]) - norm_ln_pdf(at[1])).exp();
    if v.is_nan() {
        0.0
    } else {
        v.min(DENSITY_CEILING)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::{CopulaFamily, CopulaSpec};
    use crate::empirical::pseudo_observations_of_pairs;
    use crate::special::{norm_cdf, norm_pdf};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    // Independent oracle. With a Gaussian kernel the maximizer makes
    // K_b exp(P_a) proportional to the normal law with the kernel-weighted mean
    // and covariance of the data, which gives exp(a0) in closed form.
    fn moment_matching_oracle(pts: &ProbitPoints, at: [f64; 2], b: f64) -> f64 {
        let n = pts.len() as f64;
        let (mut sw, mut m1, mut m2) = (0.0, [0.0; 2], [0.0; 3]);
        for p in pts.points() {
            let d = [p[0] - at[0], p[1] - at[1]];
            let w = (-(d[0] * d[0] + d[1] * d[1]) / (2.0 * b * b)).exp() / (2.0 * std::f64::consts::PI * b * b);
            sw += w;
            m1[0] += w * d[0];
            m1[1] += w * d[1];
            m2[0] += w * d[0] * d[0];
            m2[1] += w * d[0] * d[1];
            m2[2] += w * d[1] * d[1];
        }
        let mu = [m1[0] / sw, m1[1] / sw];
        let s11 = m2[0] / sw - mu[0] * mu[0];
        let s12 = m2[1] / sw - mu[0] * mu[1];
        let s22 = m2[2] / sw - mu[1] * mu[1];
        let det = s11 * s22 - s12 * s12;
        let quad = (s22 * mu[0] * mu[0] - 2.0 * s12 * mu[0] * mu[1] + s11 * mu[1] * mu[1]) / det;
        (sw / n) * b * b * (-0.5 * quad).exp() / det.sqrt()
    }

    fn normal_points(n: usize, seed: u64) -> ProbitPoints {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ProbitPoints::new((0..n).map(|_| [rng.sample(StandardNormal), rng.sample(StandardNormal)]).collect()).unwrap()
    }

    fn sample_ps(family: CopulaFamily, tau: f64, n: usize, seed: u64) -> PseudoSample {
        let spec = if tau == 0.0 {
            CopulaSpec::new(CopulaFamily::Gaussian, 0.0).unwrap()
        } else {
            CopulaSpec::from_tau(family, tau).unwrap()
        };
        pseudo_observations_of_pairs(&spec.sample(n, seed).unwrap()).unwrap()
    }

    #[test]
    fn probit_examples() {
        let ps = PseudoSample::from_points(vec![
            UnitPair { u: 0.5, v: 0.5 },
            UnitPair { u: norm_cdf(1.5), v: norm_cdf(-0.3) },
        ])
        .unwrap();
        let p = probit_transform(&ps).unwrap();
        assert_eq!(p.points()[0], [0.0, 0.0]);
        assert!((p.points()[1][0] - 1.5).abs() < 1e-10 && (p.points()[1][1] + 0.3).abs() < 1e-10);

        let n = 100;
        let grid: Vec<(f64, f64)> = (1..=n).map(|i| (i as f64, ((i * 37) % n) as f64)).collect();
        let ps = crate::empirical::pseudo_observations(&crate::empirical::RawSample::new(grid).unwrap());
        let p = probit_transform(&ps).unwrap();
        let mean = p.points().iter().map(|q| q[0]).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.2);
    }

    #[test]
    fn nn_bandwidth_examples() {
        let corners = ProbitPoints::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        // k = ceil(0.25 * 4) = 1.
        assert_eq!(median_knn_distance(&corners, 0.25).unwrap(), 1.0);
        assert!(matches!(nn_bandwidth(&corners, 0.25), Err(Error::InsufficientData(_))));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let near: Vec<[f64; 2]> = (0..1000).map(|_| [1e-4 * rng.random::<f64>(), 1e-4 * rng.random::<f64>()]).collect();
        assert_eq!(nn_bandwidth(&ProbitPoints::new(near).unwrap(), 0.3).unwrap().b, MIN_BANDWIDTH);

        let same = ProbitPoints::new(vec![[0.2, 0.2]; 20]).unwrap();
        assert!(matches!(nn_bandwidth(&same, 0.3), Err(Error::DegenerateData(_))));
        assert!(nn_bandwidth(&normal_points(50, 1), 0.0).is_err());
    }

    #[test]
    fn nn_bandwidth_is_stable_in_n_for_fixed_fraction() {
        // With k proportional to n the k-NN distance tends to the radius of the
        // disc holding a k_frac share of the mass, so b does not shrink with n.
        let avg = |n: usize, f: f64| (0..5).map(|s| nn_bandwidth(&normal_points(n, 10 + s), f).unwrap().b).sum::<f64>() / 5.0;
        let (small, large) = (avg(100, 0.3), avg(1000, 0.3));
        assert!((large - small).abs() < 0.05 * small, "b(100) = {small}, b(1000) = {large}");
        // A smaller fraction gives a smaller bandwidth.
        assert!(avg(1000, 0.05) < large);
    }

    #[test]
    fn newton_matches_moment_matching_oracle() {
        let pts = normal_points(400, 7);
        let bw = Bandwidth::fixed(0.6).unwrap();
        for &at in &[[0.0, 0.0], [1.2, -0.4], [-2.0, 1.5], [2.6, 2.6]] {
            let fit = local_fit(&pts, at, &bw).unwrap();
            assert!(fit.converged, "{at:?} {fit:?}");
            assert_relative_eq!(fit.density(), moment_matching_oracle(&pts, at, 0.6), max_relative = 1e-7);
        }
    }

    #[test]
    fn independent_normal_density_at_origin() {
        for seed in 0..5 {
            let pts = normal_points(5000, 100 + seed);
            let bw = nn_bandwidth(&pts, DEFAULT_K_FRAC).unwrap();
            let fit = local_fit(&pts, [0.0, 0.0], &bw).unwrap();
            assert!(fit.converged);
            assert!((fit.density() - norm_pdf(0.0).powi(2)).abs() < 0.02, "seed {seed}: {}", fit.density());
        }
    }

    #[test]
    fn single_datum_is_finite() {
        let pts = ProbitPoints::new(vec![[0.3, -0.2]]).unwrap();
        let fit = local_fit(&pts, [0.3, -0.2], &Bandwidth::fixed(0.5).unwrap()).unwrap();
        assert!(fit.a.iter().all(|x| x.is_finite()), "{fit:?}");
        assert!(fit.density().is_finite());
    }

    #[test]
    fn symmetric_data_has_zero_slope_at_origin() {
        let base = normal_points(300, 11);
        let mut pts: Vec<[f64; 2]> = base.points().to_vec();
        pts.extend(base.points().iter().map(|p| [-p[0], -p[1]]));
        let pts = ProbitPoints::new(pts).unwrap();
        let fit = local_fit(&pts, [0.0, 0.0], &nn_bandwidth(&pts, 0.3).unwrap()).unwrap();
        assert!(fit.a[1].abs() < 1e-3 && fit.a[2].abs() < 1e-3, "{fit:?}");

        // The copula density at (1/2, 1/2) is exp(a0) / phi(0)^2, phi(0)^2 = 1 / (2 pi).
        let ps = PseudoSample::from_points(pts.points().iter().map(|p| UnitPair { u: norm_cdf(p[0]), v: norm_cdf(p[1]) }).collect()).unwrap();
        let est = llpt_density_with(&pts, &[UnitPair { u: 0.5, v: 0.5 }], nn_bandwidth(&pts, 0.3).unwrap()).unwrap();
        assert_relative_eq!(est.values()[0], fit.density() / 0.159_154_943_091_895_34, max_relative = 1e-12);
        assert!(!ps.is_empty());
    }

    #[test]
    fn empty_query_gives_empty_estimate() {
        let ps = sample_ps(CopulaFamily::Clayton, 0.3, 50, 1);
        let est = llpt_density(&ps, &[], DEFAULT_K_FRAC).unwrap();
        assert!(est.is_empty());
    }

    #[test]
    fn independence_grid_is_flat() {
        let grid: Vec<UnitPair> = (1..=9).flat_map(|i| (1..=9).map(move |j| UnitPair { u: i as f64 / 10.0, v: j as f64 / 10.0 })).collect();
        for seed in 0..5 {
            let ps = sample_ps(CopulaFamily::Gaussian, 0.0, 500, 40 + seed);
            let est = llpt_density(&ps, &grid, DEFAULT_K_FRAC).unwrap();
            let inside = est.values().iter().filter(|&&c| (0.5..=1.6).contains(&c)).count();
            assert!(inside as f64 >= 0.95 * grid.len() as f64, "seed {seed}: {inside}/{}", grid.len());
        }
    }

    #[test]
    fn estimated_mass_is_near_one() {
        let m = 64;
        let grid: Vec<UnitPair> =
            (0..m).flat_map(|i| (0..m).map(move |j| UnitPair { u: (i as f64 + 0.5) / m as f64, v: (j as f64 + 0.5) / m as f64 })).collect();
        for (k, fam) in [CopulaFamily::Clayton, CopulaFamily::Gumbel, CopulaFamily::Frank, CopulaFamily::Gaussian, CopulaFamily::StudentT { nu: 2.0 }]
            .into_iter()
            .enumerate()
        {
            let ps = sample_ps(fam, 0.4, 500, 70 + k as u64);
            let est = llpt_density(&ps, &grid, DEFAULT_K_FRAC).unwrap();
            let mass = est.values().iter().sum::<f64>() / (m * m) as f64;
            assert!((0.7..=1.3).contains(&mass), "{fam}: mass {mass}");
        }
    }

    #[test]
    fn exchange_symmetry() {
        let ps = sample_ps(CopulaFamily::Clayton, 0.5, 200, 5);
        let query: Vec<UnitPair> = ps.points()[..40].to_vec();
        let a = llpt_density(&ps, &query, DEFAULT_K_FRAC).unwrap();
        let swapped_q: Vec<UnitPair> = query.iter().map(UnitPair::swapped).collect();
        let b = llpt_density(&ps.swapped(), &swapped_q, DEFAULT_K_FRAC).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_relative_eq!(*x, *y, max_relative = 1e-10);
        }
    }

    #[test]
    fn density_is_ratio_of_local_fit() {
        let ps = sample_ps(CopulaFamily::Frank, 0.3, 300, 9);
        let pts = probit_transform(&ps).unwrap();
        let bw = nn_bandwidth(&pts, DEFAULT_K_FRAC).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let query: Vec<UnitPair> = (0..20).map(|_| UnitPair { u: rng.random_range(0.02..0.98), v: rng.random_range(0.02..0.98) }).collect();
        let est = llpt_density_with(&pts, &query, bw).unwrap();
        for (q, c) in query.iter().zip(est.values()) {
            let at = [norm_quantile(q.u), norm_quantile(q.v)];
            let fit = local_fit(&pts, at, &bw).unwrap();
            let direct = fit.density() / (norm_pdf(at[0]) * norm_pdf(at[1]));
            assert_relative_eq!(*c, direct, max_relative = 1e-12);
            assert!(*c >= 0.0 && c.is_finite());
        }
    }

    #[test]
    fn per_point_bandwidth_runs() {
        let ps = sample_ps(CopulaFamily::Gumbel, 0.4, 150, 2);
        let pts = probit_transform(&ps).unwrap();
        let mut bw = nn_bandwidth(&pts, DEFAULT_K_FRAC).unwrap();
        bw.per_point = true;
        let est = llpt_density_with(&pts, ps.points(), bw).unwrap();
        assert!(est.values().iter().all(|c| c.is_finite() && *c > 0.0));
    }
}
