//! Network dissimilarity built from node-distance distributions, network node
//! dispersion and alpha-centrality distributions of a graph and its complement.
//!
//! Directed inputs are symmetrized: an edge exists if either direction has
//! positive weight.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Network;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchieberWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Default for SchieberWeights {
    fn default() -> Self {
        Self { w1: 0.45, w2: 0.45, w3: 0.10 }
    }
}

/// Per-graph summaries the dissimilarity is computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct SchieberProfile {
    /// Mean node-distance distribution over categories `1..=N` (N = unreachable).
    pub mean_distance_pdf: Vec<f64>,
    /// Network node dispersion.
    pub nnd: f64,
    pub alpha_graph: Vec<f64>,
    pub alpha_complement: Vec<f64>,
}

fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

fn bfs_hops(adj: &[bool], n: usize, s: usize) -> Vec<usize> {
    let mut d = vec![usize::MAX; n];
    d[s] = 0;
    let mut queue = std::collections::VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if adj[u * n + v] && d[v] == usize::MAX {
                d[v] = d[u] + 1;
                queue.push_back(v);
            }
        }
    }
    d
}

/// Row `i` holds the fraction of the other nodes at each hop distance `1..=N`,
/// with unreachable nodes counted at distance `N`.
fn node_distance_matrix(adj: &[bool], n: usize) -> Vec<Vec<f64>> {
    if n == 1 {
        return vec![vec![1.0]];
    }
    (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            for (j, &d) in bfs_hops(adj, n, i).iter().enumerate() {
                if j == i {
                    continue;
                }
                let cat = if d == usize::MAX { n } else { d };
                row[cat - 1] += 1.0;
            }
            row.iter_mut().for_each(|x| *x /= (n - 1) as f64);
            row
        })
        .collect()
}

fn alpha_centrality(adj: &[bool], n: usize) -> Vec<f64> {
    let a = DMatrix::from_fn(n, n, |i, j| if adj[i * n + j] { 1.0 } else { 0.0 });
    let denom = (n.max(2) - 1) as f64;
    let exo = DVector::from_fn(n, |i, _| a.row(i).sum() / denom);
    let m = DMatrix::<f64>::identity(n, n) - a.transpose() / n as f64;
    let x = m.lu().solve(&exo).unwrap_or_else(|| exo.clone());
    let mut r: Vec<f64> = x.iter().map(|v| v / (n * n) as f64).collect();
    r.sort_by(f64::total_cmp);
    let rest = (1.0 - r.iter().sum::<f64>()).max(0.0);
    r.push(rest);
    r
}

fn symmetric_adjacency(net: &Network) -> Vec<bool> {
    net.binary_adjacency()
}

pub fn schieber_profile(net: &Network) -> SchieberProfile {
    let n = net.n_nodes();
    let adj = symmetric_adjacency(net);
    let nd = node_distance_matrix(&adj, n);
    let width = nd[0].len();
    let mut mu = vec![0.0; width];
    for row in &nd {
        for (m, x) in mu.iter_mut().zip(row) {
            *m += x / n as f64;
        }
    }
    let upto = n.saturating_sub(1).min(width);
    let nonzero = mu[..upto].iter().filter(|&&x| x > 0.0).count();
    let norm = ((nonzero + 1).max(2) as f64).ln();
    let mean_row_entropy = nd.iter().map(|r| entropy(r)).sum::<f64>() / n as f64;
    let nnd = (entropy(&mu) - mean_row_entropy).max(0.0) / norm;
    let comp: Vec<bool> = (0..n * n).map(|idx| idx / n != idx % n && !adj[idx]).collect();
    SchieberProfile {
        mean_distance_pdf: mu,
        nnd,
        alpha_graph: alpha_centrality(&adj, n),
        alpha_complement: alpha_centrality(&comp, n),
    }
}

fn padded(a: &[f64], len: usize) -> Vec<f64> {
    let mut v = a.to_vec();
    v.resize(len, 0.0);
    v
}

/// Jensen-Shannon divergence in nats, zero-padding the shorter vector.
fn jsd(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    let (p, q) = (padded(p, len), padded(q, len));
    let m: Vec<f64> = p.iter().zip(&q).map(|(a, b)| (a + b) / 2.0).collect();
    (entropy(&m) - (entropy(&p) + entropy(&q)) / 2.0).max(0.0)
}

pub fn schieber_distance_profiles(a: &SchieberProfile, b: &SchieberProfile, w: SchieberWeights) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    let first = (jsd(&a.mean_distance_pdf, &b.mean_distance_pdf) / ln2).sqrt();
    let second = (a.nnd.sqrt() - b.nnd.sqrt()).abs();
    let third = (jsd(&a.alpha_graph, &b.alpha_graph) / ln2).sqrt() / 2.0
        + (jsd(&a.alpha_complement, &b.alpha_complement) / ln2).sqrt() / 2.0;
    w.w1 * first + w.w2 * second + w.w3 * third
}

/// Dissimilarity in `[0, 1]` with the default weights (0.45, 0.45, 0.10).
pub fn schieber_distance(a: &Network, b: &Network) -> f64 {
    schieber_distance_weighted(a, b, SchieberWeights::default())
}

/// Graphs of different sizes are compared after padding the smaller one with
/// isolated nodes.
pub fn schieber_distance_weighted(a: &Network, b: &Network, w: SchieberWeights) -> f64 {
    let n = a.n_nodes().max(b.n_nodes());
    let (a, b) = (pad_isolated(a, n), pad_isolated(b, n));
    schieber_distance_profiles(&schieber_profile(&a), &schieber_profile(&b), w)
}

fn pad_isolated(net: &Network, n: usize) -> Network {
    let m = net.n_nodes();
    if m == n {
        return net.clone();
    }
    let mut w = vec![0u32; n * n];
    for i in 0..m {
        w[i * n..i * n + m].copy_from_slice(&net.weights()[i * m..(i + 1) * m]);
    }
    Network::new(n, w, net.is_directed(), net.family()).expect("padding keeps a valid network")
}

/// Pairwise dissimilarities of all networks, profiles computed once each.
pub fn schieber_distance_matrix(nets: &[Network], w: SchieberWeights) -> DMatrix<f64> {
    let profiles: Vec<SchieberProfile> = nets.iter().map(schieber_profile).collect();
    let m = nets.len();
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let v = schieber_distance_profiles(&profiles[i], &profiles[j], w);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}
