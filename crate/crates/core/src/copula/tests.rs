use super::*;
use crate::empirical::{kendall_tau_sample, RawSample};
use approx::assert_relative_eq;
use rand::Rng;

fn families() -> Vec<CopulaFamily> {
    vec![
        CopulaFamily::Clayton,
        CopulaFamily::Gumbel,
        CopulaFamily::Frank,
        CopulaFamily::Gaussian,
        CopulaFamily::StudentT { nu: 2.0 },
        CopulaFamily::StudentT { nu: 10.0 },
    ]
}

fn pair(u: f64, v: f64) -> UnitPair {
    UnitPair::new(u, v).unwrap()
}

#[test]
fn clayton_cdf_closed_form() {
    let c = CopulaSpec::new(CopulaFamily::Clayton, 2.0).unwrap();
    assert_relative_eq!(c.cdf(pair(0.5, 0.5)).unwrap(), 7f64.powf(-0.5), epsilon = 1e-14);
    assert_relative_eq!(c.cdf(pair(0.5, 0.5)).unwrap(), 0.377_964_473, epsilon = 1e-8);
}

#[test]
fn gaussian_independence_is_product() {
    let c = CopulaSpec::new(CopulaFamily::Gaussian, 0.0).unwrap();
    for &(u, v) in &[(0.1, 0.2), (0.5, 0.5), (0.93, 0.07)] {
        assert_relative_eq!(c.cdf(pair(u, v)).unwrap(), u * v, epsilon = 1e-15);
    }
}

#[test]
fn boundary_values_hold_for_every_family() {
    for fam in families() {
        let tau = 0.4;
        let spec = CopulaSpec::from_tau(fam, tau).unwrap();
        for &u in &[0.0, 0.2, 0.77, 1.0] {
            assert_eq!(spec.cdf(pair(u, 0.0)).unwrap(), 0.0);
            assert_eq!(spec.cdf(pair(0.0, u)).unwrap(), 0.0);
            assert_relative_eq!(spec.cdf(pair(u, 1.0)).unwrap(), u, epsilon = 1e-15);
            assert_relative_eq!(spec.cdf(pair(1.0, u)).unwrap(), u, epsilon = 1e-15);
        }
    }
}

#[test]
fn out_of_space_parameters_are_rejected() {
    assert!(CopulaSpec::new(CopulaFamily::Clayton, 0.0).is_err());
    assert!(CopulaSpec::new(CopulaFamily::Clayton, -1.0).is_err());
    assert!(CopulaSpec::new(CopulaFamily::Gumbel, 0.99).is_err());
    assert!(CopulaSpec::new(CopulaFamily::Frank, 0.0).is_err());
    assert!(CopulaSpec::new(CopulaFamily::Gaussian, 1.01).is_err());
    assert!(CopulaSpec::new(CopulaFamily::StudentT { nu: 1.0 }, 0.5).is_err());
    assert!(CopulaSpec::new(CopulaFamily::Frank, f64::NAN).is_err());
    assert!(matches!(CopulaSpec::new(CopulaFamily::Gumbel, 0.5), Err(Error::ParameterDomain(_))));
    assert!(CopulaSpec::new(CopulaFamily::Clayton, -0.5).is_ok());
}

#[test]
fn density_examples() {
    let g = CopulaSpec::new(CopulaFamily::Gumbel, 1.0).unwrap();
    for &(u, v) in &[(0.1, 0.9), (0.5, 0.5), (0.33, 0.01)] {
        assert_relative_eq!(g.pdf(pair(u, v)).unwrap().value, 1.0, epsilon = 1e-14);
    }
    // (1 + theta)(uv)^(-theta-1)(u^-theta + v^-theta - 1)^(-1/theta-2) at theta = 2.
    let c = CopulaSpec::new(CopulaFamily::Clayton, 2.0).unwrap();
    let expected = 3.0 * 0.25f64.powi(-3) * 7f64.powf(-2.5);
    assert_relative_eq!(c.pdf(pair(0.5, 0.5)).unwrap().value, expected, epsilon = 1e-13);
    // 192 / (49 sqrt 7); the commonly quoted 1.48130 is a rounding slip.
    assert_relative_eq!(expected, 1.481_004, epsilon = 1e-6);
}

#[test]
fn density_rejects_boundary() {
    let c = CopulaSpec::new(CopulaFamily::Frank, 3.0).unwrap();
    assert!(matches!(c.pdf(pair(0.0, 0.5)), Err(Error::Domain(_))));
    assert!(c.pdf(pair(0.5, 1.0)).is_err());
}

#[test]
fn density_saturates_at_ceiling() {
    let c = CopulaSpec::new(CopulaFamily::Clayton, 60.0).unwrap();
    let d = c.pdf(pair(1e-12, 1e-12)).unwrap();
    assert!(d.saturated);
    assert_eq!(d.value, DENSITY_CEILING);
    let d = c.pdf(pair(0.5, 0.4)).unwrap();
    assert!(!d.saturated);
}

fn midpoint_mass(spec: &CopulaSpec, m: usize) -> f64 {
    let h = 1.0 / m as f64;
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            let p = pair((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            s += spec.pdf(p).unwrap().value;
        }
    }
    s * h * h
}

#[test]
fn gaussian_density_integrates_to_one() {
    let spec = CopulaSpec::new(CopulaFamily::Gaussian, 0.5).unwrap();
    let mass = midpoint_mass(&spec, 400);
    assert!((mass - 1.0).abs() <= 0.02, "mass = {mass}");
}

#[test]
fn densities_integrate_to_one() {
    for fam in families() {
        let spec = CopulaSpec::from_tau(fam, 0.3).unwrap();
        let mass = midpoint_mass(&spec, 300);
        assert!((mass - 1.0).abs() <= 0.03, "{fam}: mass = {mass}");
    }
    for &theta in &[-0.5, -4.0] {
        let fam = if theta > -1.0 { CopulaFamily::Clayton } else { CopulaFamily::Frank };
        let spec = CopulaSpec::new(fam, theta).unwrap();
        let mass = midpoint_mass(&spec, 300);
        assert!((mass - 1.0).abs() <= 0.03, "{spec}: mass = {mass}");
    }
}

#[test]
fn tau_examples() {
    let c = CopulaSpec::new(CopulaFamily::Clayton, 2.0).unwrap();
    assert_relative_eq!(c.kendall_tau(), 0.5, epsilon = 1e-15);
    let g = CopulaSpec::new(CopulaFamily::Gumbel, 1.4176).unwrap();
    assert!((g.kendall_tau() - 0.2946).abs() < 5e-4);
    let n = CopulaSpec::new(CopulaFamily::Gaussian, 0.4312).unwrap();
    assert!((n.kendall_tau() - 0.2838).abs() < 5e-4);
    // Root-finding oracle: Frank tau = 0.5 at theta ~ 5.736.
    let f = CopulaSpec::new(CopulaFamily::Frank, 5.736).unwrap();
    assert!((f.kendall_tau() - 0.5).abs() < 1e-4);
}

#[test]
fn theta_from_tau_examples() {
    assert_relative_eq!(CopulaFamily::Clayton.theta_from_tau(0.4).unwrap(), 4.0 / 3.0, epsilon = 1e-15);
    assert_relative_eq!(
        CopulaFamily::Gaussian.theta_from_tau(0.5).unwrap(),
        std::f64::consts::FRAC_1_SQRT_2,
        epsilon = 1e-15
    );
    assert_eq!(CopulaFamily::Gumbel.theta_from_tau(0.0).unwrap(), 1.0);
    assert!(matches!(CopulaFamily::Gumbel.theta_from_tau(-0.1), Err(Error::Domain(_))));
    assert!(CopulaFamily::Clayton.theta_from_tau(1.0).is_err());
    let frank = CopulaFamily::Frank.theta_from_tau(0.5).unwrap();
    assert!((frank - 5.736).abs() < 1e-3, "{frank}");
}

#[test]
fn tau_round_trip() {
    for fam in families() {
        for k in 1..=8 {
            for sign in [1.0, -1.0] {
                let tau = sign * k as f64 / 10.0;
                if fam == CopulaFamily::Gumbel && tau < 0.0 {
                    continue;
                }
                let theta = fam.theta_from_tau(tau).unwrap();
                let back = CopulaSpec::new(fam, theta).unwrap().kendall_tau();
                assert!((back - tau).abs() <= 1e-10, "{fam} tau={tau} back={back}");
            }
        }
    }
}

fn random_spec<R: Rng>(rng: &mut R) -> CopulaSpec {
    let fams = families();
    let fam = fams[rng.random_range(0..fams.len())];
    let tau: f64 = if fam == CopulaFamily::Gumbel { rng.random_range(0.01..0.9) } else { rng.random_range(-0.85..0.9) };
    let tau = if tau.abs() < 0.01 { 0.05 } else { tau };
    CopulaSpec::from_tau(fam, tau).unwrap()
}

#[test]
fn random_boundary_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let spec = random_spec(&mut rng);
        let u: f64 = rng.random();
        assert!((spec.cdf(pair(u, 1.0)).unwrap() - u).abs() <= 1e-9);
        assert_eq!(spec.cdf(pair(u, 0.0)).unwrap(), 0.0);
    }
}

#[test]
fn two_increasing_on_random_rectangles() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..400 {
        let spec = random_spec(&mut rng);
        let (mut u1, mut u2): (f64, f64) = (rng.random(), rng.random());
        let (mut v1, mut v2): (f64, f64) = (rng.random(), rng.random());
        if u1 > u2 {
            std::mem::swap(&mut u1, &mut u2);
        }
        if v1 > v2 {
            std::mem::swap(&mut v1, &mut v2);
        }
        let c = |u, v| spec.cdf(pair(u, v)).unwrap();
        let vol = c(u2, v2) - c(u1, v2) - c(u2, v1) + c(u1, v1);
        assert!(vol >= -1e-12, "{spec}: volume {vol} on [{u1},{u2}]x[{v1},{v2}]");
    }
}

#[test]
fn density_matches_cdf_finite_difference() {
    let h = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut specs: Vec<CopulaSpec> = families()
        .into_iter()
        .flat_map(|f| [0.2, 0.5].into_iter().map(move |t| CopulaSpec::from_tau(f, t).unwrap()))
        .collect();
    specs.push(CopulaSpec::new(CopulaFamily::Frank, -3.0).unwrap());
    specs.push(CopulaSpec::new(CopulaFamily::Clayton, -0.3).unwrap());
    specs.push(CopulaSpec::new(CopulaFamily::Gaussian, -0.6).unwrap());
    for spec in specs {
        for _ in 0..10 {
            let u = rng.random_range(0.15..0.85);
            let v = rng.random_range(0.15..0.85);
            let c = |u, v| spec.cdf(pair(u, v)).unwrap();
            let fd = (c(u + h, v + h) - c(u + h, v - h) - c(u - h, v + h) + c(u - h, v - h)) / (4.0 * h * h);
            let pdf = spec.pdf(pair(u, v)).unwrap().value;
            assert!(((fd - pdf) / pdf).abs() <= 1e-4, "{spec} at ({u}, {v}): fd {fd} vs pdf {pdf}");
        }
    }
}

#[test]
fn sample_is_deterministic_and_validated() {
    let spec = CopulaSpec::new(CopulaFamily::Frank, 4.0).unwrap();
    assert_eq!(spec.sample(50, 9).unwrap(), spec.sample(50, 9).unwrap());
    assert_ne!(spec.sample(50, 9).unwrap(), spec.sample(50, 10).unwrap());
    assert!(matches!(spec.sample(0, 1), Err(Error::Contract(_))));
    assert!(spec.sample(200, 1).unwrap().iter().all(|p| p.is_interior()));
}

fn sample_tau(spec: &CopulaSpec, n: usize, seed: u64) -> (f64, Vec<UnitPair>) {
    let pts = spec.sample(n, seed).unwrap();
    let raw = RawSample::new(pts.iter().map(|p| (p.u, p.v)).collect()).unwrap();
    (kendall_tau_sample(&raw).unwrap(), pts)
}

#[test]
fn sampler_examples() {
    let g = CopulaSpec::new(CopulaFamily::Gaussian, 0.8).unwrap();
    let (tau, _) = sample_tau(&g, 10_000, 1);
    assert!((tau - 2.0 / std::f64::consts::PI * 0.8f64.asin()).abs() < 0.03, "{tau}");
    let ind = CopulaSpec::new(CopulaFamily::Gumbel, 1.0).unwrap();
    let (tau, _) = sample_tau(&ind, 5_000, 2);
    assert!(tau.abs() < 0.03, "{tau}");
}

// Standard error of Kendall's tau from the Hoeffding projection
// h1(u, v) = 4 C(u, v) - 2u - 2v + 1, with C replaced by the empirical copula.
fn tau_standard_error(pts: &[UnitPair]) -> f64 {
    let n = pts.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| pts[a].u.total_cmp(&pts[b].u));
    let mut vs: Vec<f64> = pts.iter().map(|p| p.v).collect();
    vs.sort_by(f64::total_cmp);
    let mut tree = vec![0usize; n + 1];
    let mut dominated = vec![0usize; n];
    for &i in &idx {
        let r = vs.partition_point(|&x| x < pts[i].v) + 1;
        let mut k = r;
        let mut count = 0;
        while k > 0 {
            count += tree[k];
            k &= k - 1;
        }
        dominated[i] = count;
        let mut k = r;
        while k <= n {
            tree[k] += 1;
            k += k & k.wrapping_neg();
        }
    }
    let h: Vec<f64> = (0..n)
        .map(|i| 4.0 * dominated[i] as f64 / n as f64 - 2.0 * pts[i].u - 2.0 * pts[i].v + 1.0)
        .collect();
    let mean = h.iter().sum::<f64>() / n as f64;
    let var = h.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (4.0 * var / n as f64).sqrt()
}

#[test]
fn sampler_reproduces_kendall_tau() {
    let mut seed = 100;
    for fam in families() {
        for &tau in &[0.2, 0.6] {
            seed += 1;
            let spec = CopulaSpec::from_tau(fam, tau).unwrap();
            let (est, pts) = sample_tau(&spec, 20_000, seed);
            let se = tau_standard_error(&pts);
            assert!((est - tau).abs() <= 4.0 * se, "{fam} tau={tau}: est {est}, se {se}");
        }
    }
    // Negative dependence.
    for (fam, tau) in [(CopulaFamily::Clayton, -0.3), (CopulaFamily::Frank, -0.5), (CopulaFamily::Gaussian, -0.4)] {
        let spec = CopulaSpec::from_tau(fam, tau).unwrap();
        let (est, pts) = sample_tau(&spec, 20_000, 77);
        let se = tau_standard_error(&pts);
        assert!((est - tau).abs() <= 4.0 * se, "{fam} tau={tau}: est {est}, se {se}");
    }
}

#[test]
fn family_parsing_round_trips() {
    for fam in families() {
        let s = fam.to_string();
        assert_eq!(s.parse::<CopulaFamily>().unwrap(), fam);
    }
    assert_eq!("t:4".parse::<CopulaFamily>().unwrap(), CopulaFamily::StudentT { nu: 4.0 });
    assert!("t0.5".parse::<CopulaFamily>().is_err());
    assert!("joe".parse::<CopulaFamily>().is_err());
}

#[test]
fn prepared_points_match_pdf() {
    let pts = [pair(0.2, 0.7), pair(0.45, 0.4), pair(0.9, 0.85)];
    for fam in families() {
        let spec = CopulaSpec::from_tau(fam, 0.35).unwrap();
        let prep = PreparedPoints::new(fam, &pts);
        for (i, p) in pts.iter().enumerate() {
            assert_relative_eq!(prep.pdf_clamped(spec.theta(), i), spec.pdf(*p).unwrap().value, epsilon = 1e-12);
        }
    }
}
