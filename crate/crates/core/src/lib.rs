//! Bayesian co-clustering of multiplex networks.
//!
//! Networks are grouped into clusters that each carry their own latent space,
//! and the nodes of each latent space are clustered by a Gaussian mixture. The
//! numbers of network and node clusters are inferred with a telescoping
//! Metropolis-within-Gibbs sampler. The crate also covers initialization,
//! label-switching post-processing, scenario simulation, clustering metrics and
//! posterior predictive checks.

pub mod cluster;
pub mod data;
pub mod distributions;
pub mod evaluation;
pub mod error;
pub mod linalg;
pub mod model;
pub mod postprocess;
pub mod sampler;

pub use error::{Error, Result};
