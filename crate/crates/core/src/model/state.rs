use serde::{Deserialize, Serialize};

use super::{Hyperparams, Variant};
use crate::error::{validation, Result};
use crate::linalg::Point;

/// Parameters attached to one network-level component: its latent space and the
/// node-level mixture living in it. Allocations are 0-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub k: usize,
    pub k_plus: usize,
    pub w: f64,
    pub log_pi: Vec<f64>,
    pub s: Vec<usize>,
    pub mu: Vec<Point>,
    pub sigma2: Vec<Point>,
    pub z: Vec<Point>,
}

impl Component {
    pub fn pi(&self) -> Vec<f64> {
        self.log_pi.iter().map(|x| x.exp()).collect()
    }

    pub fn node_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for &s in &self.s {
            c[s] += 1;
        }
        c
    }

    /// Moves occupied node clusters to the front (keeping their order) and
    /// updates `k_plus`.
    pub fn relabel_nodes(&mut self) {
        let counts = self.node_counts();
        let order = occupied_first(&counts);
        self.k_plus = counts.iter().filter(|&&c| c > 0).count();
        if order.iter().enumerate().all(|(i, &o)| i == o) {
            return;
        }
        self.permute_nodes(&order);
    }

    /// Applies `order`: new cluster `i` is old cluster `order[i]`.
    pub fn permute_nodes(&mut self, order: &[usize]) {
        let mut inv = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            inv[old] = new;
        }
        self.log_pi = order.iter().map(|&o| self.log_pi[o]).collect();
        self.mu = order.iter().map(|&o| self.mu[o]).collect();
        self.sigma2 = order.iter().map(|&o| self.sigma2[o]).collect();
        for s in self.s.iter_mut() {
            *s = inv[*s];
        }
    }
}

/// One state of the Markov chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub g: usize,
    pub g_plus: usize,
    pub log_tau: Vec<f64>,
    pub e: f64,
    pub c: Vec<usize>,
    pub alpha: f64,
    pub comps: Vec<Component>,
}

/// Permutation listing occupied slots first, then empty ones, each in order.
pub fn occupied_first(counts: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..counts.len()).filter(|&i| counts[i] > 0).collect();
    order.extend((0..counts.len()).filter(|&i| counts[i] == 0));
    order
}

impl ModelState {
    pub fn tau(&self) -> Vec<f64> {
        self.log_tau.iter().map(|x| x.exp()).collect()
    }

    pub fn network_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.g];
        for &x in &self.c {
            c[x] += 1;
        }
        c
    }

    pub fn n_nodes(&self) -> usize {
        self.comps.first().map_or(0, |c| c.z.len())
    }

    /// Moves occupied network clusters to the front and updates `g_plus`.
    pub fn relabel_networks(&mut self) {
        let counts = self.network_counts();
        let order = occupied_first(&counts);
        self.g_plus = counts.iter().filter(|&&c| c > 0).count();
        if order.iter().enumerate().all(|(i, &o)| i == o) {
            return;
        }
        self.permute_networks(&order);
    }

    /// Applies `order`: new component `i` is old component `order[i]`.
    pub fn permute_networks(&mut self, order: &[usize]) {
        let mut inv = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            inv[old] = new;
        }
        self.log_tau = order.iter().map(|&o| self.log_tau[o]).collect();
        self.comps = order.iter().map(|&o| self.comps[o].clone()).collect();
        for c in self.c.iter_mut() {
            *c = inv[*c];
        }
    }

    /// Checks the structural invariants that hold after every sweep.
    pub fn check_invariants(&self, hyper: &Hyperparams, variant: Variant) -> Result<()> {
        let fail = |m: String| Err(validation(m));
        if self.g < 1 || self.g > hyper.g_max.max(1) {
            return fail(format!("G={} outside [1, {}]", self.g, hyper.g_max));
        }
        if self.log_tau.len() != self.g || self.comps.len() != self.g {
            return fail("tau or component list does not have G entries".into());
        }
        if !self.e.is_finite() || self.e <= 0.0 || !self.alpha.is_finite() {
            return fail(format!("non-finite or non-positive scalar (e={}, alpha={})", self.e, self.alpha));
        }
        check_simplex(&self.log_tau, "tau")?;
        let counts = self.network_counts();
        let g_plus = counts.iter().filter(|&&c| c > 0).count();
        if g_plus != self.g_plus || counts[..g_plus].iter().any(|&c| c == 0) {
            return fail(format!("occupied network clusters are not first (counts {counts:?}, G+={})", self.g_plus));
        }
        let n = self.n_nodes();
        for (g, comp) in self.comps.iter().enumerate() {
            if comp.z.len() != n || comp.s.len() != n {
                return fail(format!("component {g} has wrong node dimension"));
            }
            if comp.z.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
                return fail(format!("component {g} has non-finite latent positions"));
            }
            if variant == Variant::MonoLapcm {
                continue;
            }
            if comp.k < 1 || comp.k > hyper.k_max {
                return fail(format!("component {g}: K={} outside [1, {}]", comp.k, hyper.k_max));
            }
            if comp.log_pi.len() != comp.k || comp.mu.len() != comp.k || comp.sigma2.len() != comp.k {
                return fail(format!("component {g}: node-level vectors do not have K entries"));
            }
            if comp.s.iter().any(|&s| s >= comp.k) {
                return fail(format!("component {g}: allocation out of range"));
            }
            check_simplex(&comp.log_pi, "pi")?;
            if comp.sigma2.iter().any(|s| !(s[0] > 0.0 && s[1] > 0.0)) || !(comp.w > 0.0) {
                return fail(format!("component {g}: non-positive variance or concentration"));
            }
            if g < self.g_plus {
                let nc = comp.node_counts();
                let kp = nc.iter().filter(|&&c| c > 0).count();
                if kp != comp.k_plus || nc[..kp].iter().any(|&c| c == 0) {
                    return fail(format!("component {g}: occupied node clusters are not first ({nc:?})"));
                }
            }
        }
        Ok(())
    }
}

fn check_simplex(log_w: &[f64], name: &str) -> Result<()> {
    let s: f64 = log_w.iter().map(|x| x.exp()).sum();
    if log_w.iter().any(|x| x.is_nan() || *x > 1e-12) || (s - 1.0).abs() > 1e-9 {
        return Err(validation(format!("{name} is not a simplex (sum {s})")));
    }
    Ok(())
}
