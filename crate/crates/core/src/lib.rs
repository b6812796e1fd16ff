mod error;

pub mod bp_sim;
pub mod const_analysis;
pub mod dist;
pub mod epi_sim;
pub mod exp_analysis;
pub mod params;
pub mod quadrature;
pub mod rng;
pub mod root;

pub use dist::{Bound, DiffLaw, DistributionSpec, Moment};
pub use error::{Error, Result};
pub use params::{DelayCoupling, ModelParams};

/// Library version recorded in experiment outputs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
