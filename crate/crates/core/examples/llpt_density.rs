//! Local-likelihood probit-transform density estimate against the true Clayton density.
use copulafit::empirical::pseudo_observations_of_pairs;
use copulafit::llpt::{llpt_density, DEFAULT_K_FRAC};
use copulafit::{CopulaFamily, CopulaSpec, UnitPair};

fn main() -> copulafit::Result<()> {
    let spec = CopulaSpec::from_tau(CopulaFamily::Clayton, 0.4)?;
    let ps = pseudo_observations_of_pairs(&spec.sample(300, 11)?)?;
    let query: Vec<UnitPair> = [(0.1, 0.1), (0.25, 0.3), (0.5, 0.5), (0.8, 0.2), (0.9, 0.9)]
        .iter()
        .map(|&(u, v)| UnitPair::new(u, v))
        .collect::<copulafit::Result<_>>()?;
    let est = llpt_density(&ps, &query, DEFAULT_K_FRAC)?;
    println!("bandwidth b = {:.4}, all local fits converged: {}", est.bandwidth.b, est.all_converged());
    for (q, chat) in query.iter().zip(est.values()) {
        println!("({:.2}, {:.2})  c_hat = {:7.4}  c = {:7.4}", q.u, q.v, chat, spec.pdf(*q)?.value);
    }
    Ok(())
}
