use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::model::{Hyperparams, Variant};

/// Clusterer used to split the networks at initialization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMethod {
    #[default]
    Kmeans,
    Gmm,
}

impl std::str::FromStr for InitMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "kmeans" => Ok(InitMethod::Kmeans),
            "gmm" => Ok(InitMethod::Gmm),
            other => Err(format!("unknown init method {other:?} (expected kmeans or gmm)")),
        }
    }
}

/// Run-length, seeding and model options of one chain.
///
/// `n_iter` counts post-burn-in sweeps; the chain runs `burn_in + n_iter`
/// sweeps and keeps every `thin`-th post-burn-in state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub variant: Variant,
    pub init_method: InitMethod,
    pub hyper: Hyperparams,
    /// Robbins-Monro adaptation of proposal scales during burn-in.
    pub auto_tune: bool,
    /// Noise scale for the starting values of replicate chains.
    pub perturb_scale: f64,
}

impl SamplerConfig {
    pub fn new(hyper: Hyperparams) -> Self {
        Self {
            n_iter: 30_000,
            burn_in: 9_000,
            thin: 30,
            seed: 0,
            variant: Variant::Lapcom,
            init_method: InitMethod::Kmeans,
            hyper,
            auto_tune: true,
            perturb_scale: 0.1,
        }
    }

    /// Default settings for a multiplex with `m` networks on `n` nodes.
    pub fn for_size(m: usize, n: usize) -> Self {
        Self::new(Hyperparams::defaults(m, n))
    }

    pub fn n_samples(&self) -> usize {
        self.n_iter / self.thin
    }

    pub fn total_sweeps(&self) -> usize {
        self.burn_in + self.n_iter
    }

    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        if self.n_iter == 0 || self.thin == 0 {
            return Err(validation("n_iter and thin must be positive"));
        }
        if self.n_iter % self.thin != 0 {
            return Err(validation(format!("n_iter ({}) must be a multiple of thin ({})", self.n_iter, self.thin)));
        }
        if !(self.perturb_scale >= 0.0) {
            return Err(validation("perturb_scale must be non-negative"));
        }
        self.hyper.validate(n_nodes)
    }
}
