//! Multiplex network data: validated adjacency matrices, dyad sets and geodesics.

mod io;

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::distributions::EdgeFamily;
use crate::error::{validation, Result};

pub use io::{load_multiplex, read_manifest, save_multiplex, InputFormat, Manifest};

/// One square adjacency matrix with integer weights, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    n: usize,
    weights: Vec<u32>,
    directed: bool,
    family: EdgeFamily,
}

impl Network {
    /// Builds a network, checking the diagonal, symmetry and family constraints.
    pub fn new(n: usize, weights: Vec<u32>, directed: bool, family: EdgeFamily) -> Result<Self> {
        if n == 0 {
            return Err(validation("a network needs at least one node"));
        }
        if weights.len() != n * n {
            return Err(validation(format!(
                "expected {} weights for N={n}, got {}",
                n * n,
                weights.len()
            )));
        }
        for i in 0..n {
            if weights[i * n + i] != 0 {
                return Err(validation(format!("self-loop at node {}", i + 1)));
            }
        }
        if !directed {
            for i in 0..n {
                for j in (i + 1)..n {
                    if weights[i * n + j] != weights[j * n + i] {
                        return Err(validation(format!(
                            "undirected network is asymmetric at ({}, {})",
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        if family == EdgeFamily::Binary {
            if let Some(w) = weights.iter().find(|&&w| w > 1) {
                return Err(validation(format!("binary network holds weight {w}")));
            }
        }
        Ok(Self { n, weights, directed, family })
    }

    /// Builds a network and infers the family: binary iff every weight is 0 or 1.
    pub fn from_weights(n: usize, weights: Vec<u32>, directed: bool) -> Result<Self> {
        let family = infer_family(weights.iter().copied());
        Self::new(n, weights, directed, family)
    }

    /// Same as [`Network::from_weights`] from a dense matrix of weights.
    pub fn from_matrix(m: &DMatrix<u32>, directed: bool, family: EdgeFamily) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(validation("adjacency matrix is not square"));
        }
        let n = m.nrows();
        let weights = (0..n).flat_map(|i| (0..n).map(move |j| m[(i, j)])).collect();
        Self::new(n, weights, directed, family)
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn family(&self) -> EdgeFamily {
        self.family
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.weights[i * self.n + j]
    }

    /// Row-major weights.
    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn dyads(&self) -> Dyads {
        Dyads::new(self.n, self.directed)
    }

    pub fn n_dyads(&self) -> usize {
        n_dyads(self.n, self.directed)
    }

    /// Fraction of dyads carrying a positive weight.
    pub fn density(&self) -> f64 {
        let nd = self.n_dyads();
        if nd == 0 {
            return 0.0;
        }
        self.dyads().filter(|&(i, j)| self.get(i, j) > 0).count() as f64 / nd as f64
    }

    /// Symmetric 0/1 adjacency: an edge exists if either direction has positive weight.
    pub fn binary_adjacency(&self) -> Vec<bool> {
        let n = self.n;
        let mut adj = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                if self.get(i, j) > 0 {
                    adj[i * n + j] = true;
                    adj[j * n + i] = true;
                }
            }
        }
        adj
    }

    /// Hop-count shortest paths on the binarized, symmetrized graph.
    ///
    /// Pairs in different connected components get one more than the largest
    /// finite distance, so an edgeless graph has every off-diagonal entry at 1.
    pub fn geodesic_distance_matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        let adj = self.binary_adjacency();
        let nbrs: Vec<Vec<usize>> =
            (0..n).map(|i| (0..n).filter(|&j| adj[i * n + j]).collect()).collect();
        let mut hops = vec![usize::MAX; n * n];
        let mut queue = VecDeque::with_capacity(n);
        for s in 0..n {
            let row = &mut hops[s * n..(s + 1) * n];
            row[s] = 0;
            queue.clear();
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                let du = row[u];
                for &v in &nbrs[u] {
                    if row[v] == usize::MAX {
                        row[v] = du + 1;
                        queue.push_back(v);
                    }
                }
            }
        }
        let max_finite = hops.iter().copied().filter(|&d| d != usize::MAX).max().unwrap_or(0);
        DMatrix::from_fn(n, n, |i, j| {
            let d = hops[i * n + j];
            if d == usize::MAX { (max_finite + 1) as f64 } else { d as f64 }
        })
    }
}

/// Binary iff every weight is 0 or 1.
pub fn infer_family(weights: impl IntoIterator<Item = u32>) -> EdgeFamily {
    if weights.into_iter().all(|w| w <= 1) {
        EdgeFamily::Binary
    } else {
        EdgeFamily::Count
    }
}

pub fn n_dyads(n: usize, directed: bool) -> usize {
    if directed { n * n.saturating_sub(1) } else { n * n.saturating_sub(1) / 2 }
}

/// Iterator over the dyads entering the likelihood: ordered pairs `i != j` when
/// directed, unordered pairs `i < j` otherwise. Indices are 0-based.
#[derive(Clone, Debug)]
pub struct Dyads {
    n: usize,
    directed: bool,
    i: usize,
    j: usize,
}

impl Dyads {
    pub fn new(n: usize, directed: bool) -> Self {
        let mut d = Self { n, directed, i: 0, j: 0 };
        d.j = d.first_j(0);
        d
    }

    fn first_j(&self, i: usize) -> usize {
        if self.directed {
            usize::from(i == 0)
        } else {
            i + 1
        }
    }
}

impl Iterator for Dyads {
    type Item = (usize, usize);

    fn next(&mut self) -> Option<(usize, usize)> {
        loop {
            if self.i >= self.n {
                return None;
            }
            if self.j >= self.n {
                self.i += 1;
                self.j = self.first_j(self.i);
                continue;
            }
            let out = (self.i, self.j);
            self.j += 1;
            if self.directed && self.j == self.i {
                self.j += 1;
            }
            return Some(out);
        }
    }
}

/// An ordered stack of networks on a shared node set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multiplex {
    networks: Vec<Network>,
    labels: Vec<String>,
}

impl Multiplex {
    pub fn new(networks: Vec<Network>, labels: Vec<String>) -> Result<Self> {
        let first = networks.first().ok_or_else(|| validation("a multiplex needs at least one network"))?;
        if labels.len() != networks.len() {
            return Err(validation(format!(
                "{} labels for {} networks",
                labels.len(),
                networks.len()
            )));
        }
        for (m, net) in networks.iter().enumerate() {
            if net.n != first.n || net.directed != first.directed || net.family != first.family {
                return Err(validation(format!(
                    "network {} ({}) disagrees with network 1 on size, direction or family",
                    m + 1,
                    labels[m]
                )));
            }
        }
        Ok(Self { networks, labels })
    }

    /// Labels default to `layer_1 .. layer_M`.
    pub fn from_networks(networks: Vec<Network>) -> Result<Self> {
        let labels = (1..=networks.len()).map(|m| format!("layer_{m}")).collect();
        Self::new(networks, labels)
    }

    /// Re-tags every layer as count-valued when any layer carries a weight above 1.
    pub fn harmonize_family(networks: Vec<Network>) -> Vec<Network> {
        if networks.iter().any(|n| n.family == EdgeFamily::Count) {
            networks
                .into_iter()
                .map(|mut n| {
                    n.family = EdgeFamily::Count;
                    n
                })
                .collect()
        } else {
            networks
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.networks[0].n
    }

    pub fn n_layers(&self) -> usize {
        self.networks.len()
    }

    pub fn is_directed(&self) -> bool {
        self.networks[0].directed
    }

    pub fn family(&self) -> EdgeFamily {
        self.networks[0].family
    }

    pub fn networks(&self) -> &[Network] {
        &self.networks
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, m: usize) -> &Network {
        &self.networks[m]
    }
}
