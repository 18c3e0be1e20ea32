//! Rank transform of raw data, with mid-ranks for ties, and the empirical copula.
use copulafit::empirical::{empirical_copula, kendall_tau_sample, pseudo_observations};
use copulafit::{RawSample, UnitPair};

fn main() -> copulafit::Result<()> {
    // Drought-like data: integer durations with ties.
    let raw = RawSample::new(vec![(1.0, 3.0), (2.0, 5.0), (1.0, 2.0), (4.0, 9.0), (2.0, 4.0), (3.0, 4.0)])?;
    let ps = pseudo_observations(&raw);
    for ((x, y), p) in raw.pairs().iter().zip(ps.points()) {
        println!("({x}, {y}) -> ({:.4}, {:.4})", p.u, p.v);
    }
    println!("C_n(0.5, 0.5) = {:.4}", empirical_copula(&ps, UnitPair::new(0.5, 0.5)?));
    println!("tau-b = {:.4}", kendall_tau_sample(&raw)?);
    Ok(())
}
