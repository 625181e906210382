//! Binned Dirichlet-Categorical posteriors for comparing two groups of
//! bounded per-visitor metrics, with Normal and bootstrap baselines and a
//! simulation harness with exact ground truth.

pub mod baselines;
pub mod cli;
pub mod error;
pub mod metrics;
pub mod posterior;
pub mod report;
pub mod rng;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
