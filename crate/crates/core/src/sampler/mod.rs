//! Markov chain Monte Carlo over the model: initialization, sweeps and chains.

mod chain;
mod config;
mod init;
mod sweep;
pub mod trace_io;

pub use chain::{
    build_model, chain_start, initial_state, run_chain, run_multichain, ChainRunner, Checkpoint, RngState, Trace,
};
pub use config::{InitMethod, SamplerConfig};
pub use init::{
    init_chain, init_from_prior, initial_alpha, initial_latent_space, initial_network_partition, perturb_state,
};
pub use sweep::{
    draw_mu, draw_sigma2, prior_component, sweep, AcceptCounter, AcceptStats, ProposalScales, SweepControl, TARGET_BLOCK, TARGET_SCALAR,
};
