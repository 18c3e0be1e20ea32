pub mod cli;
pub mod copula;
pub mod empirical;
pub mod error;
pub mod gof;
pub mod hydro;
pub mod estimators;
pub mod llpt;
pub mod optimize;
pub mod quadrature;
pub mod seed;
pub mod simstudy;
pub mod special;

pub use copula::{CopulaFamily, CopulaSpec, Density, UnitPair};
pub use empirical::{PseudoSample, RawSample};
pub use error::{Error, Result};
