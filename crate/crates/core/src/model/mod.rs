//! Model definition: hyperparameters, state, likelihood and full conditionals.

mod conditionals;
mod hyper;
mod likelihood;
mod posterior;
mod state;

use serde::{Deserialize, Serialize};

pub use conditionals::{
    component_count_logweights, concentration_log_target, mh_logratio_alpha, mh_logratio_concentration,
    mh_logratio_z, mu_full_conditional, network_alloc_logprobs, node_alloc_logprobs, sigma2_full_conditional,
    MuPosterior, Sigma2Posterior,
};
pub use hyper::Hyperparams;
pub use likelihood::{network_loglik, Geometry, ModelData, NetData};
pub use posterior::log_posterior;
pub use state::{occupied_first, Component, ModelState};

/// Full co-clustering model, or the ablation without node-level clusters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    #[default]
    #[serde(rename = "lapcom")]
    Lapcom,
    /// Network-level mixture only; latent positions are standard bivariate normal.
    #[serde(rename = "mono-lapcm")]
    MonoLapcm,
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lapcom" => Ok(Variant::Lapcom),
            "mono-lapcm" => Ok(Variant::MonoLapcm),
            other => Err(format!("unknown variant {other:?} (expected lapcom or mono-lapcm)")),
        }
    }
}

/// Everything a sweep needs besides the state: data summaries, priors and variant.
#[derive(Clone, Debug)]
pub struct Model {
    pub data: ModelData,
    pub hyper: Hyperparams,
    pub variant: Variant,
}

impl Model {
    pub fn new(data: ModelData, hyper: Hyperparams, variant: Variant) -> Self {
        Self { data, hyper, variant }
    }
}
