//! Sparse Bayesian regression with logit-normal continuous spike-and-slab
//! (LN-CASS) shrinkage priors.
//!
//! The crate covers the full workflow used for the simulation and case
//! studies: data generation ([`simgen`]), preprocessing and fold
//! construction ([`dataprep`]), log-posterior densities with analytic
//! gradients ([`model`]), a multinomial No-U-Turn sampler with windowed
//! adaptation ([`sampler`]), the piecewise-linear GAM basis ([`gam_basis`]),
//! evaluation measures ([`metrics`]) and fit/predict/cross-validation glue
//! ([`pipeline`]).

pub mod dataprep;
pub mod error;
pub mod gam_basis;
pub mod math;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod sampler;
pub mod simgen;

pub use error::{Error, Result};
