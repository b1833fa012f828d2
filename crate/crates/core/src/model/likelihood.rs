//! Network log-likelihood, both the direct dyad sum and a decomposed form that
//! separates data-dependent and geometry-dependent parts.
//!
//! With `d_ij = |z_i - z_j|^2` and `eta = alpha - d_ij`, the log-likelihood of a
//! network splits into `alpha * sum(y) - sum(y * d) - shared(alpha) - sum(log y!)`
//! where `shared` depends only on the latent space: `exp(alpha) * sum(exp(-d))`
//! for counts and `sum(softplus(alpha - d))` for binary edges.

use crate::data::{Multiplex, Network};
use crate::distributions::{edge_logpmf_unchecked, ln_factorial, softplus, EdgeFamily};
use crate::linalg::{sq_dist, Point};

/// Direct sum of edge log-pmfs over the dyad set.
pub fn network_loglik(y: &Network, z: &[Point], alpha: f64, family: EdgeFamily) -> f64 {
    y.dyads().map(|(i, j)| edge_logpmf_unchecked(y.get(i, j), alpha - sq_dist(z[i], z[j]), family)).sum()
}

#[inline]
pub(crate) fn packed_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Sufficient summaries of one network.
#[derive(Clone, Debug)]
pub struct NetData {
    /// Positive entries as (packed unordered pair, weight). Directed networks list
    /// each direction separately.
    pub pos: Vec<(u32, f64)>,
    pub sum_y: f64,
    pub log_fact: f64,
}

impl NetData {
    pub fn from_network(y: &Network) -> Self {
        let n = y.n_nodes();
        let mut pos = Vec::new();
        let mut sum_y = 0.0;
        let mut log_fact = 0.0;
        for (i, j) in y.dyads() {
            let v = y.get(i, j);
            if v > 0 {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                pos.push((packed_index(n, a, b) as u32, v as f64));
                sum_y += v as f64;
                log_fact += ln_factorial(v);
            }
        }
        Self { pos, sum_y, log_fact }
    }
}

/// Data summaries shared by all chains. In data-free mode every likelihood is zero.
#[derive(Clone, Debug)]
pub struct ModelData {
    pub n_nodes: usize,
    pub n_networks: usize,
    pub family: EdgeFamily,
    pub directed: bool,
    pub nets: Vec<NetData>,
    pub data_free: bool,
}

impl ModelData {
    pub fn from_multiplex(y: &Multiplex) -> Self {
        Self {
            n_nodes: y.n_nodes(),
            n_networks: y.n_layers(),
            family: y.family(),
            directed: y.is_directed(),
            nets: y.networks().iter().map(NetData::from_network).collect(),
            data_free: false,
        }
    }

    /// A model with `m` placeholder networks whose likelihood is constant.
    pub fn data_free(m: usize, n: usize, family: EdgeFamily) -> Self {
        Self { n_nodes: n, n_networks: m, family, directed: false, nets: Vec::new(), data_free: true }
    }

    /// Dyad multiplicity of each unordered pair.
    pub fn multiplicity(&self) -> f64 {
        if self.directed {
            2.0
        } else {
            1.0
        }
    }

    /// `sum(y * d)` for network `m` under geometry `geo`.
    #[inline]
    pub fn cross(&self, m: usize, geo: &Geometry) -> f64 {
        if self.data_free {
            return 0.0;
        }
        self.nets[m].pos.iter().map(|&(idx, y)| y * geo.d2[idx as usize]).sum()
    }

    /// Log-likelihood of network `m` given the geometry's latent space, with the
    /// geometry-only part `shared` precomputed.
    #[inline]
    pub fn loglik(&self, m: usize, geo: &Geometry, alpha: f64, shared: f64) -> f64 {
        if self.data_free {
            return 0.0;
        }
        let net = &self.nets[m];
        alpha * net.sum_y - self.cross(m, geo) - shared - net.log_fact
    }

    pub fn shared(&self, geo: &Geometry, alpha: f64) -> f64 {
        if self.data_free {
            return 0.0;
        }
        self.multiplicity() * geo.shared(alpha, self.family)
    }
}

/// Packed pairwise squared distances of a latent space.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub d2: Vec<f64>,
    /// `exp(-d)` per pair, kept for binary data.
    pub exp_neg: Vec<f64>,
    /// `sum(exp(-d))` over unordered pairs.
    pub sum_exp_neg: f64,
}

impl Geometry {
    pub fn new(z: &[Point], family: EdgeFamily) -> Self {
        let n = z.len();
        let mut d2 = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                d2.push(sq_dist(z[i], z[j]));
            }
        }
        let exp_neg: Vec<f64> = d2.iter().map(|d| (-d).exp()).collect();
        let sum_exp_neg = exp_neg.iter().sum();
        let exp_neg = if family == EdgeFamily::Binary { exp_neg } else { Vec::new() };
        Self { d2, exp_neg, sum_exp_neg }
    }

    /// Geometry-only part of the log-likelihood over unordered pairs.
    pub fn shared(&self, alpha: f64, family: EdgeFamily) -> f64 {
        match family {
            EdgeFamily::Count => alpha.exp() * self.sum_exp_neg,
            // log(1 + e^alpha e^-d) needs one logarithm per pair; the direct
            // form takes over where e^alpha could overflow
            EdgeFamily::Binary if alpha < 30.0 && self.exp_neg.len() == self.d2.len() => {
                let ea = alpha.exp();
                self.exp_neg.iter().map(|&x| (ea * x).ln_1p()).sum()
            }
            EdgeFamily::Binary => self.d2.iter().map(|&d| softplus(alpha - d)).sum(),
        }
    }
}
