//! Starting values of a chain.

use nalgebra::DMatrix;
use rand::Rng;

use super::config::{InitMethod, SamplerConfig};
use super::sweep::prior_component;
use crate::cluster::{canonical_labels, gmm, kmeans, KMeansOptions};
use crate::data::Multiplex;
use crate::distributions::{sample_fisher_f, sample_invgamma, std_normal};
use crate::error::Result;
use crate::evaluation::schieber::{schieber_distance_matrix, SchieberWeights};
use crate::linalg::{classical_mds, sq_dist, Point};
use crate::model::{Component, Model, ModelState, Variant};

/// Splits the networks into `g` groups by clustering a 2-D scaling of their
/// pairwise dissimilarities. Labels are 0-based in order of first appearance.
pub fn initial_network_partition<R: Rng + ?Sized>(y: &Multiplex, g: usize, method: InitMethod, rng: &mut R) -> Vec<usize> {
    let m = y.n_layers();
    if g <= 1 {
        return vec![0; m];
    }
    if g >= m {
        return (0..m).collect();
    }
    let d = schieber_distance_matrix(y.networks(), SchieberWeights::default());
    let emb = classical_mds(&d);
    let flat: Vec<f64> = emb.iter().flat_map(|p| [p[0], p[1]]).collect();
    let labels = match method {
        InitMethod::Kmeans => kmeans(&flat, 2, g, KMeansOptions::default(), rng).labels,
        InitMethod::Gmm => gmm(&flat, 2, g, 100, rng),
    };
    canonical_labels(&labels)
}

/// Classical scaling of the geodesic distances averaged over the given networks.
pub fn initial_latent_space(y: &Multiplex, members: &[usize]) -> Vec<Point> {
    let n = y.n_nodes();
    let mut avg = DMatrix::<f64>::zeros(n, n);
    for &m in members {
        avg += y.get(m).geodesic_distance_matrix();
    }
    avg /= members.len().max(1) as f64;
    classical_mds(&avg)
}

/// Intercept guess from the mean edge weight per dyad and the mean squared
/// latent distance.
pub fn initial_alpha(y: &Multiplex, c: &[usize], zs: &[Vec<Point>]) -> f64 {
    let n = y.n_nodes();
    let floor = 1.0 / (n * n) as f64;
    let mut total = 0.0;
    for (m, &g) in c.iter().enumerate() {
        let net = y.get(m);
        let nd = net.n_dyads().max(1) as f64;
        let mean_y = net.dyads().map(|(i, j)| net.get(i, j) as f64).sum::<f64>() / nd;
        let z = &zs[g];
        let mut sd = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                sd += sq_dist(z[i], z[j]);
            }
        }
        let npairs = (n * n.saturating_sub(1) / 2).max(1) as f64;
        total += mean_y.max(floor).ln() + sd / npairs;
    }
    total / c.len() as f64
}

fn node_level_start<R: Rng + ?Sized>(z: Vec<Point>, model: &Model, rng: &mut R) -> Component {
    let h = &model.hyper;
    let n = z.len();
    if model.variant == Variant::MonoLapcm {
        return Component {
            k: 1,
            k_plus: 1,
            w: 1.0,
            log_pi: vec![0.0],
            s: vec![0; n],
            mu: vec![[0.0, 0.0]],
            sigma2: vec![[1.0, 1.0]],
            z,
        };
    }
    let k = h.k0.min(h.k_max).min(n).max(1);
    let flat: Vec<f64> = z.iter().flat_map(|p| [p[0], p[1]]).collect();
    let fit = kmeans(&flat, 2, k, KMeansOptions::default(), rng);
    let s = canonical_labels(&fit.labels);
    let mut mu = vec![[0.0; 2]; k];
    let mut cnt = vec![0usize; k];
    for (p, &l) in z.iter().zip(&s) {
        mu[l][0] += p[0];
        mu[l][1] += p[1];
        cnt[l] += 1;
    }
    for (m, &c) in mu.iter_mut().zip(&cnt) {
        let c = c.max(1) as f64;
        *m = [m[0] / c, m[1] / c];
    }
    let sigma2 = (0..k)
        .map(|_| {
            [
                sample_invgamma(h.u_sigma2, h.v_sigma2, rng).expect("validated"),
                sample_invgamma(h.u_sigma2, h.v_sigma2, rng).expect("validated"),
            ]
        })
        .collect();
    let mut comp = Component {
        k,
        k_plus: k,
        w: sample_fisher_f(h.l_k, h.r_k, rng).expect("validated"),
        log_pi: vec![-(k as f64).ln(); k],
        s,
        mu,
        sigma2,
        z,
    };
    comp.relabel_nodes();
    comp
}

/// Deterministic data-driven starting state.
pub fn init_chain<R: Rng + ?Sized>(y: &Multiplex, model: &Model, cfg: &SamplerConfig, rng: &mut R) -> Result<ModelState> {
    cfg.validate(y.n_nodes())?;
    let m = y.n_layers();
    let g = cfg.hyper.g0.min(m).max(1);
    let c = initial_network_partition(y, g, cfg.init_method, rng);
    let g = c.iter().max().map_or(1, |&x| x + 1);
    let zs: Vec<Vec<Point>> = (0..g)
        .map(|k| {
            let members: Vec<usize> = (0..m).filter(|&i| c[i] == k).collect();
            initial_latent_space(y, &members)
        })
        .collect();
    let alpha = initial_alpha(y, &c, &zs);
    let comps = zs.into_iter().map(|z| node_level_start(z, model, rng)).collect();
    let mut state = ModelState {
        g,
        g_plus: g,
        log_tau: vec![-(g as f64).ln(); g],
        e: 1e-5,
        c,
        alpha,
        comps,
    };
    state.relabel_networks();
    Ok(state)
}

/// Starting state drawn from the prior, for data-free runs.
pub fn init_from_prior<R: Rng + ?Sized>(model: &Model, rng: &mut R) -> ModelState {
    let h = &model.hyper;
    let m = model.data.n_networks;
    let g = h.g0.min(m).max(1);
    let mut state = ModelState {
        g,
        g_plus: g,
        log_tau: vec![-(g as f64).ln(); g],
        e: sample_fisher_f(h.l_g, h.r_g, rng).expect("validated"),
        c: (0..m).map(|i| i % g).collect(),
        alpha: h.m_alpha + h.s_alpha * std_normal(rng),
        comps: (0..g).map(|_| prior_component(model, rng)).collect(),
    };
    state.relabel_networks();
    state
}

/// Adds zero-mean Gaussian noise to the latent spaces (per-coordinate standard
/// deviation times `scale`) and to the intercept (`scale`).
pub fn perturb_state<R: Rng + ?Sized>(state: &mut ModelState, scale: f64, rng: &mut R) {
    for comp in state.comps.iter_mut() {
        let n = comp.z.len().max(1) as f64;
        let mut sd = [0.0; 2];
        for q in 0..2 {
            let mean = comp.z.iter().map(|p| p[q]).sum::<f64>() / n;
            sd[q] = (comp.z.iter().map(|p| (p[q] - mean).powi(2)).sum::<f64>() / n).sqrt();
        }
        for p in comp.z.iter_mut() {
            p[0] += scale * sd[0] * std_normal(rng);
            p[1] += scale * sd[1] * std_normal(rng);
        }
    }
    state.alpha += scale * std_normal(rng);
}
