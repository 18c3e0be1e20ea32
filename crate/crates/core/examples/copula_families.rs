//! Parameter/tau maps, CDF and density values, and sampler agreement for each family.
use copulafit::empirical::{kendall_tau_sample, RawSample};
use copulafit::{CopulaFamily, CopulaSpec, UnitPair};

fn main() -> copulafit::Result<()> {
    let families = ["clayton", "gumbel", "frank", "gaussian", "t2"];
    let p = UnitPair::new(0.3, 0.7)?;
    println!("{:<9} {:>8} {:>10} {:>10} {:>12}", "family", "theta", "C(.3,.7)", "c(.3,.7)", "tau sample");
    for name in families {
        let family: CopulaFamily = name.parse()?;
        let spec = CopulaSpec::from_tau(family, 0.5)?;
        let draws = spec.sample(5000, 1)?;
        let tau = kendall_tau_sample(&RawSample::new(draws.iter().map(|d| (d.u, d.v)).collect())?)?;
        println!("{:<9} {:>8.4} {:>10.5} {:>10.5} {:>12.4}", name, spec.theta(), spec.cdf(p)?, spec.pdf(p)?.value, tau);
    }
    Ok(())
}
