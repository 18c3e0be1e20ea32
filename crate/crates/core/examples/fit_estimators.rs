//! MPL, MPHD, MPND and a generic alpha estimator on one Gumbel sample.
use copulafit::empirical::pseudo_observations_of_pairs;
use copulafit::estimators::{fit, Method};
use copulafit::llpt::{llpt_density, DEFAULT_K_FRAC};
use copulafit::{CopulaFamily, CopulaSpec};

fn main() -> copulafit::Result<()> {
    let family = CopulaFamily::Gumbel;
    let truth = CopulaSpec::from_tau(family, 0.4)?;
    let ps = pseudo_observations_of_pairs(&truth.sample(150, 2024)?)?;
    // One LLPT estimate serves every divergence method.
    let chat = llpt_density(&ps, ps.points(), DEFAULT_K_FRAC)?;
    println!("true theta = {:.4}", truth.theta());
    for m in ["mpl", "mphd", "mpnd", "mpkld", "mpad:0.25"] {
        let method: Method = m.parse()?;
        let r = fit(method, family, &ps, Some(&chat), DEFAULT_K_FRAC)?;
        println!("{:<10} theta = {:.4}  tau = {:.4}  objective = {:.5}  evals = {}", m, r.theta_hat, r.tau_hat, r.objective_at_opt, r.evaluations);
    }
    Ok(())
}
