//! From raw traces to identified point estimates.
//!
//! Per chain the order is fixed: minimum-VI partition, k-means relabelling,
//! alignment of the point estimate with the relabelled draws, then Procrustes
//! alignment of the latent spaces. Node clusters are handled inside each network
//! cluster after the network level.

mod io;
mod partition;
mod relabel;

pub use io::{read_solution, write_solution_bundle, SolutionBundle};
pub use partition::{
    minvi_partition, posterior_similarity_matrix, smallest_mode, vi_lower_bound, MinViPartition, PartitionDraws,
};
pub use relabel::{
    align_reference_partition, kmeans_relabel, procrustes_align, transform_cluster_params, AlignedPartition,
    ProcrustesAligned, RelabelLevel, Relabelled,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::evaluation::metrics::ari;
use crate::linalg::{Point, Similarity};
use crate::model::{log_posterior, Component, Model, ModelState, Variant};
use crate::sampler::Trace;

/// Estimates for one network cluster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSolution {
    pub s_hat: Vec<usize>,
    /// Node clusters in the point estimate.
    pub k_hat_plus: usize,
    /// Modal occupied node-cluster count across the draws before node-level
    /// relabelling (ties to the smaller).
    pub k_hat_plus_pre_relabel: usize,
    pub z_hat: Vec<Point>,
    pub mu_hat: Vec<Point>,
    pub sigma2_hat: Vec<Point>,
    pub pi_hat: Vec<f64>,
    pub w_hat: f64,
    /// Over all retained iterations of the chain.
    pub valid_iteration_mask: Vec<bool>,
    pub alignment_tie: bool,
    /// Node-level relabelling found no valid iteration; cluster parameters
    /// were recomputed from the point estimates.
    pub relabel_failed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub group: usize,
    pub iteration: usize,
    pub transform: Similarity,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteringSolution {
    pub chain: usize,
    pub c_hat: Vec<usize>,
    pub g_hat_plus: usize,
    /// Modal occupied network-cluster count over the draws (ties to the smaller).
    pub g_plus_modal: usize,
    pub valid_iteration_mask: Vec<bool>,
    pub alignment_tie: bool,
    pub alpha_hat: f64,
    pub e_hat: f64,
    pub tau_hat: Vec<f64>,
    pub groups: Vec<GroupSolution>,
    pub transforms: Vec<TransformRecord>,
    pub log_posterior_at_estimate: f64,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n.max(1) as f64
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Cluster means and per-dimension variances of points grouped by `labels`.
fn empirical_cluster_params(z: &[Point], labels: &[usize], k: usize) -> (Vec<Point>, Vec<Point>) {
    let mut mu = vec![[0.0; 2]; k];
    let mut var = vec![[0.0; 2]; k];
    let mut n = vec![0.0; k];
    for (p, &l) in z.iter().zip(labels) {
        n[l] += 1.0;
        mu[l][0] += p[0];
        mu[l][1] += p[1];
    }
    for (m, c) in mu.iter_mut().zip(&n) {
        m[0] /= c;
        m[1] /= c;
    }
    for (p, &l) in z.iter().zip(labels) {
        var[l][0] += (p[0] - mu[l][0]).powi(2);
        var[l][1] += (p[1] - mu[l][1]).powi(2);
    }
    for (v, c) in var.iter_mut().zip(&n) {
        v[0] = (v[0] / c).max(1e-6);
        v[1] = (v[1] / c).max(1e-6);
    }
    (mu, var)
}

fn group_solution(
    g: usize,
    net_valid: &[usize],
    samples: &[ModelState],
    variant: Variant,
    transforms: &mut Vec<TransformRecord>,
) -> Result<GroupSolution> {
    let n_iter = samples.len();
    let states: Vec<&ModelState> = net_valid.iter().map(|&t| &samples[t]).collect();
    let k_pre = smallest_mode(&states.iter().map(|s| s.comps[g].k_plus).collect::<Vec<_>>()).expect("non-empty");

    // latent space: Procrustes onto the first retained draw
    let z_draws: Vec<Vec<Point>> = states.iter().map(|s| s.comps[g].z.clone()).collect();
    let aligned = procrustes_align(&z_draws, &z_draws[0])?;
    let n = z_draws[0].len();
    let mut z_hat = vec![[0.0; 2]; n];
    for d in &aligned.draws {
        for (acc, p) in z_hat.iter_mut().zip(d) {
            acc[0] += p[0] / states.len() as f64;
            acc[1] += p[1] / states.len() as f64;
        }
    }
    for ((&t, tr), res) in net_valid.iter().zip(&aligned.transforms).zip(&aligned.residuals) {
        transforms.push(TransformRecord { group: g, iteration: t, transform: *tr, residual: *res });
    }
    let w_hat = mean(states.iter().map(|s| s.comps[g].w));

    if variant == Variant::MonoLapcm {
        return Ok(GroupSolution {
            s_hat: vec![0; n],
            k_hat_plus: 1,
            k_hat_plus_pre_relabel: 1,
            z_hat,
            mu_hat: vec![[0.0, 0.0]],
            sigma2_hat: vec![[1.0, 1.0]],
            pi_hat: vec![1.0],
            w_hat,
            valid_iteration_mask: (0..n_iter).map(|t| net_valid.contains(&t)).collect(),
            alignment_tie: false,
            relabel_failed: false,
        });
    }

    let draws = PartitionDraws::new(states.iter().map(|s| s.comps[g].s.clone()).collect())?;
    let psm = posterior_similarity_matrix(&draws);
    let best = minvi_partition(&draws, &psm);
    let k_hat = best.n_clusters;

    let subset: Vec<ModelState> = states.iter().map(|s| (*s).clone()).collect();
    let relabelled = match kmeans_relabel(&subset, RelabelLevel::Node(g), k_hat) {
        Ok(r) => Some(r),
        Err(Error::NoValidIterations(msg)) => {
            log::warn!("network cluster {g}: node-level relabelling failed ({msg})");
            None
        }
        Err(e) => return Err(e),
    };

    let Some(rel) = relabelled else {
        let (mu_hat, sigma2_hat) = empirical_cluster_params(&z_hat, &best.labels, k_hat);
        let mut counts = vec![0.0; k_hat];
        best.labels.iter().for_each(|&l| counts[l] += 1.0);
        return Ok(GroupSolution {
            s_hat: best.labels,
            k_hat_plus: k_hat,
            k_hat_plus_pre_relabel: k_pre,
            z_hat,
            mu_hat,
            sigma2_hat,
            pi_hat: normalized(counts),
            w_hat,
            valid_iteration_mask: vec![false; n_iter],
            alignment_tie: false,
            relabel_failed: true,
        });
    };

    let valid_draws: Vec<&[usize]> = rel.valid_samples().map(|s| s.comps[g].s.as_slice()).collect();
    let aligned_s = align_reference_partition(&best.labels, &valid_draws)?;
    let mut mu_hat = vec![[0.0; 2]; k_hat];
    let mut sigma2_hat = vec![[0.0; 2]; k_hat];
    let mut pi_hat = vec![0.0; k_hat];
    let nv = rel.n_valid() as f64;
    let mut mask = vec![false; n_iter];
    for (idx, state) in rel.samples.iter().enumerate() {
        if !rel.valid[idx] {
            continue;
        }
        mask[net_valid[idx]] = true;
        let comp = &state.comps[g];
        let (mu, s2) = transform_cluster_params(&aligned.transforms[idx], &comp.mu[..k_hat], &comp.sigma2[..k_hat]);
        let pi = normalized(comp.log_pi[..k_hat].iter().map(|x| x.exp()).collect());
        for k in 0..k_hat {
            for q in 0..2 {
                mu_hat[k][q] += mu[k][q] / nv;
                sigma2_hat[k][q] += s2[k][q] / nv;
            }
            pi_hat[k] += pi[k] / nv;
        }
    }
    Ok(GroupSolution {
        s_hat: aligned_s.labels,
        k_hat_plus: k_hat,
        k_hat_plus_pre_relabel: k_pre,
        z_hat,
        mu_hat,
        sigma2_hat,
        pi_hat: normalized(pi_hat),
        w_hat,
        valid_iteration_mask: mask,
        alignment_tie: aligned_s.tie,
        relabel_failed: false,
    })
}

/// Point estimates of one chain.
pub fn postprocess_chain(trace: &Trace, model: &Model) -> Result<ClusteringSolution> {
    if trace.is_empty() {
        return Err(validation(format!("chain {} has no retained samples", trace.chain)));
    }
    let samples = &trace.samples;
    let draws = PartitionDraws::new(samples.iter().map(|s| s.c.clone()).collect())?;
    let psm = posterior_similarity_matrix(&draws);
    let best = minvi_partition(&draws, &psm);
    let g_hat = best.n_clusters;
    let g_modal = smallest_mode(&samples.iter().map(|s| s.g_plus).collect::<Vec<_>>()).expect("non-empty");

    let rel = kmeans_relabel(samples, RelabelLevel::Network, g_hat)?;
    let valid_c: Vec<&[usize]> = rel.valid_samples().map(|s| s.c.as_slice()).collect();
    let aligned_c = align_reference_partition(&best.labels, &valid_c)?;
    let net_valid: Vec<usize> = (0..samples.len()).filter(|&t| rel.valid[t]).collect();

    let mut transforms = Vec::new();
    let groups = (0..g_hat)
        .map(|g| group_solution(g, &net_valid, &rel.samples, model.variant, &mut transforms))
        .collect::<Result<Vec<_>>>()?;

    let valid_states: Vec<&ModelState> = rel.valid_samples().collect();
    let tau_hat = normalized(
        (0..g_hat).map(|g| mean(valid_states.iter().map(|s| s.log_tau[g].exp()))).collect(),
    );
    let mut sol = ClusteringSolution {
        chain: trace.chain,
        c_hat: aligned_c.labels,
        g_hat_plus: g_hat,
        g_plus_modal: g_modal,
        valid_iteration_mask: rel.valid.clone(),
        alignment_tie: aligned_c.tie,
        alpha_hat: mean(valid_states.iter().map(|s| s.alpha)),
        e_hat: mean(valid_states.iter().map(|s| s.e)),
        tau_hat,
        groups,
        transforms,
        log_posterior_at_estimate: f64::NAN,
    };
    sol.log_posterior_at_estimate = log_posterior(&point_estimate_state(&sol), model);
    Ok(sol)
}

/// Model state assembled from a solution's point estimates.
pub fn point_estimate_state(sol: &ClusteringSolution) -> ModelState {
    ModelState {
        g: sol.g_hat_plus,
        g_plus: sol.g_hat_plus,
        log_tau: sol.tau_hat.iter().map(|t| t.ln()).collect(),
        e: sol.e_hat,
        c: sol.c_hat.clone(),
        alpha: sol.alpha_hat,
        comps: sol
            .groups
            .iter()
            .map(|gs| Component {
                k: gs.k_hat_plus,
                k_plus: gs.k_hat_plus,
                w: gs.w_hat,
                log_pi: gs.pi_hat.iter().map(|p| p.ln()).collect(),
                s: gs.s_hat.clone(),
                mu: gs.mu_hat.clone(),
                sigma2: gs.sigma2_hat.clone(),
                z: gs.z_hat.clone(),
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscardedChain {
    pub chain: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reconciliation {
    pub selected_chain: usize,
    pub solution: ClusteringSolution,
    /// Cluster count shared by the retained chains.
    pub g_hat_plus_mode: usize,
    /// (other retained chain, ARI of its network partition with the selected one)
    pub cross_chain_ari: Vec<(usize, f64)>,
    pub discarded: Vec<DiscardedChain>,
    pub chain_log_posteriors: Vec<(usize, f64)>,
}

/// Post-processes every chain, keeps those agreeing with the most common
/// network-cluster count (ties to the smaller) and selects the one with the
/// highest log-posterior at its point estimates.
pub fn reconcile_chains(traces: &[Trace], model: &Model) -> Result<Reconciliation> {
    if traces.is_empty() {
        return Err(validation("reconciliation needs at least one chain"));
    }
    let results: Vec<Result<ClusteringSolution>> = traces.par_iter().map(|t| postprocess_chain(t, model)).collect();
    let mut discarded = Vec::new();
    let mut ok = Vec::new();
    for (t, r) in traces.iter().zip(results) {
        match r {
            Ok(s) => ok.push(s),
            Err(Error::NoValidIterations(msg)) => {
                log::warn!("chain {} discarded: {msg}", t.chain);
                discarded.push(DiscardedChain { chain: t.chain, reason: format!("permutation check: {msg}") });
            }
            Err(e) => return Err(e),
        }
    }
    let mode = smallest_mode(&ok.iter().map(|s| s.g_hat_plus).collect::<Vec<_>>())
        .ok_or_else(|| Error::AllChainsDiscarded("every chain failed the permutation check".into()))?;
    let (kept, dropped): (Vec<_>, Vec<_>) = ok.into_iter().partition(|s| s.g_hat_plus == mode);
    for s in dropped {
        discarded.push(DiscardedChain {
            chain: s.chain,
            reason: format!("{} network clusters, cross-chain mode is {mode}", s.g_hat_plus),
        });
    }
    let chain_log_posteriors: Vec<(usize, f64)> = kept.iter().map(|s| (s.chain, s.log_posterior_at_estimate)).collect();
    let best = kept
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.log_posterior_at_estimate.total_cmp(&b.1.log_posterior_at_estimate).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::AllChainsDiscarded("no chain retained".into()))?;
    let solution = kept[best].clone();
    let cross_chain_ari = kept
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != best)
        .map(|(_, s)| Ok((s.chain, ari(&solution.c_hat, &s.c_hat)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Reconciliation {
        selected_chain: solution.chain,
        solution,
        g_hat_plus_mode: mode,
        cross_chain_ari,
        discarded,
        chain_log_posteriors,
    })
}
