use serde::{Deserialize, Serialize};

use crate::distributions::BnbParams;
use crate::error::{validation, Result};

/// Fixed prior constants, component bounds and proposal scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub m_alpha: f64,
    pub s_alpha: f64,
    /// Prior mean of node-cluster centres.
    pub mu0: [f64; 2],
    /// Prior variance of node-cluster centres (isotropic).
    pub sigma_mu: f64,
    pub u_sigma2: f64,
    pub v_sigma2: f64,
    pub bnb_g: BnbParams,
    pub bnb_k: BnbParams,
    pub l_g: f64,
    pub r_g: f64,
    pub l_k: f64,
    pub r_k: f64,
    pub g0: usize,
    pub k0: usize,
    pub g_max: usize,
    pub k_max: usize,
    pub delta_z: f64,
    pub delta_alpha: f64,
    pub s_e: f64,
    pub s_w: f64,
    pub n_min: usize,
}

impl Hyperparams {
    /// Default minimum node-cluster size: 5 below 60 nodes, 10 otherwise.
    pub fn default_n_min(n_nodes: usize) -> usize {
        if n_nodes < 60 {
            5
        } else {
            10
        }
    }

    /// Defaults for a multiplex of `m` networks on `n` nodes.
    pub fn defaults(m: usize, n: usize) -> Self {
        Self::with_n_min(m, n, Self::default_n_min(n))
    }

    pub fn with_n_min(m: usize, n: usize, n_min: usize) -> Self {
        Self {
            m_alpha: 0.0,
            s_alpha: 1.0,
            mu0: [0.0, 0.0],
            sigma_mu: 1.0,
            u_sigma2: if n < 60 { 11.0 } else { 21.0 },
            v_sigma2: 2.0,
            bnb_g: BnbParams::default(),
            bnb_k: BnbParams::default(),
            l_g: 6.0,
            r_g: 3.0,
            l_k: 6.0,
            r_k: 3.0,
            g0: 2,
            k0: 2,
            g_max: if m < 60 { 5 } else { 10 },
            k_max: Self::k_max_for(n, n_min),
            delta_z: 0.1,
            delta_alpha: 0.05,
            s_e: 1.0,
            s_w: 1.0,
            n_min,
        }
    }

    /// `round(N / n_min) + 2`, clamped to `[1, N]`.
    pub fn k_max_for(n: usize, n_min: usize) -> usize {
        let k = (n as f64 / n_min.max(1) as f64).round() as usize + 2;
        k.clamp(1, n.max(1))
    }

    /// Recomputes `k_max` after changing `n_min`.
    pub fn set_n_min(&mut self, n: usize, n_min: usize) {
        self.n_min = n_min;
        self.k_max = Self::k_max_for(n, n_min);
        self.k0 = self.k0.min(self.k_max);
    }

    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        let pos = [
            ("s_alpha", self.s_alpha),
            ("sigma_mu", self.sigma_mu),
            ("u_sigma2", self.u_sigma2),
            ("v_sigma2", self.v_sigma2),
            ("l_g", self.l_g),
            ("r_g", self.r_g),
            ("l_k", self.l_k),
            ("r_k", self.r_k),
            ("delta_z", self.delta_z),
            ("delta_alpha", self.delta_alpha),
            ("s_e", self.s_e),
            ("s_w", self.s_w),
        ];
        for (name, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(validation(format!("{name} must be positive and finite, got {v}")));
            }
        }
        self.bnb_g.validate()?;
        self.bnb_k.validate()?;
        if self.g0 < 1 || self.g0 > self.g_max {
            return Err(validation(format!("need 1 <= G0 <= G_max, got G0={}, G_max={}", self.g0, self.g_max)));
        }
        if self.k0 < 1 || self.k0 > self.k_max || self.k_max > n_nodes {
            return Err(validation(format!(
                "need 1 <= K0 <= K_max <= N, got K0={}, K_max={}, N={n_nodes}",
                self.k0, self.k_max
            )));
        }
        if self.n_min < 1 {
            return Err(validation("n_min must be at least 1"));
        }
        Ok(())
    }
}
