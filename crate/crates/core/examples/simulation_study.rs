//! A small Monte Carlo grid written as CSV to stdout.
use copulafit::estimators::Method;
use copulafit::simstudy::{run_study, write_csv, StudyConfig};
use copulafit::CopulaFamily;

fn main() -> copulafit::Result<()> {
    let cfg = StudyConfig {
        families: vec![CopulaFamily::Clayton, CopulaFamily::Gumbel],
        taus: vec![0.2, 0.6],
        ns: vec![30, 150],
        methods: vec![Method::Mpl, Method::MPHD, Method::MPND],
        replications: 100,
        ..StudyConfig::default()
    };
    let rows = run_study(&cfg)?.into_result()?;
    write_csv(&rows, std::io::stdout())
}
