//! Binned Dirichlet-Categorical posterior: binning, bin values, the conjugate
//! update, simplex sampling and per-draw summaries.

mod bins;
mod dirichlet;
mod draw;

pub use bins::{
    bin_observations, build_value_map, clamp_to_bins, BinCounts, BinSpec, Binned, ClampTally,
    OutOfRange, ValueMap,
};
pub use dirichlet::{
    bayesian_bootstrap_posterior, ln_multivariate_beta, log_density, posterior_update,
    sample_posterior, DirichletPosterior, DirichletSampler, PriorVector,
};
pub use draw::{sample_quantile, weighted_mean, PosteriorDraw, SIMPLEX_TOLERANCE};

pub(crate) use draw::{check_tau, dot, quantile_indices};
