//! Label-switching repair: k-means relabelling, reference alignment, Procrustes.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::{kmeans, KMeansOptions};
use crate::error::{validation, Error, Result};
use crate::evaluation::metrics::match_labels;
use crate::linalg::{procrustes_fit, Point, Similarity};
use crate::model::ModelState;

/// Which labels [`kmeans_relabel`] repairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelabelLevel {
    /// Network clusters, using the vectorized latent spaces.
    Network,
    /// Node clusters of network cluster `g`, using the cluster means.
    Node(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Relabelled {
    /// Same length as the input; invalid iterations are left untouched.
    pub samples: Vec<ModelState>,
    pub valid: Vec<bool>,
}

impl Relabelled {
    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn valid_samples(&self) -> impl Iterator<Item = &ModelState> {
        self.samples.iter().zip(&self.valid).filter(|(_, &v)| v).map(|(s, _)| s)
    }
}

const RELABEL_SEED: u64 = 0x5eed;

fn features(state: &ModelState, level: RelabelLevel, target_k: usize) -> Option<Vec<Vec<f64>>> {
    match level {
        RelabelLevel::Network => (state.g_plus == target_k).then(|| {
            state.comps[..target_k].iter().map(|c| c.z.iter().flat_map(|p| p.iter().copied()).collect()).collect()
        }),
        RelabelLevel::Node(g) => {
            let comp = state.comps.get(g).filter(|_| g < state.g_plus)?;
            (comp.k_plus == target_k).then(|| comp.mu[..target_k].iter().map(|m| m.to_vec()).collect())
        }
    }
}

fn permute(state: &mut ModelState, level: RelabelLevel, seq: &[usize]) {
    // seq[old] = new for the first seq.len() labels; the rest keep their slots
    let total = match level {
        RelabelLevel::Network => state.g,
        RelabelLevel::Node(g) => state.comps[g].k,
    };
    let mut order: Vec<usize> = (0..total).collect();
    for (old, &new) in seq.iter().enumerate() {
        order[new] = old;
    }
    match level {
        RelabelLevel::Network => state.permute_networks(&order),
        RelabelLevel::Node(g) => state.comps[g].permute_nodes(&order),
    }
}

/// Pools the component parameters of every iteration with exactly `target_k`
/// occupied components, clusters them into `target_k` groups, and relabels each
/// iteration whose group sequence is a permutation. Group labels follow the
/// first valid iteration, which therefore keeps its labelling.
pub fn kmeans_relabel(samples: &[ModelState], level: RelabelLevel, target_k: usize) -> Result<Relabelled> {
    if target_k == 0 {
        return Err(validation("relabelling needs at least one group"));
    }
    if samples.is_empty() {
        return Err(validation("relabelling needs a non-empty trace"));
    }
    let feats: Vec<Option<Vec<Vec<f64>>>> = samples.iter().map(|s| features(s, level, target_k)).collect();
    let eligible: Vec<usize> = (0..samples.len()).filter(|&t| feats[t].is_some()).collect();
    if eligible.is_empty() {
        return Err(Error::NoValidIterations(format!("{level:?}: no iteration has {target_k} occupied components")));
    }
    let mut seqs: Vec<Option<Vec<usize>>> = vec![None; samples.len()];
    if target_k == 1 {
        for &t in &eligible {
            seqs[t] = Some(vec![0]);
        }
    } else {
        let dim = feats[eligible[0]].as_ref().expect("eligible")[0].len();
        let data: Vec<f64> = eligible
            .iter()
            .flat_map(|&t| feats[t].as_ref().expect("eligible").iter().flatten().copied())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(RELABEL_SEED);
        let opts = KMeansOptions { restarts: 10, ..KMeansOptions::default() };
        let fit = kmeans(&data, dim, target_k, opts, &mut rng);
        for (row, &t) in eligible.iter().enumerate() {
            seqs[t] = Some(fit.labels[row * target_k..(row + 1) * target_k].to_vec());
        }
    }
    let is_perm = |s: &[usize]| {
        let mut seen = vec![false; s.len()];
        s.iter().all(|&x| x < seen.len() && !std::mem::replace(&mut seen[x], true))
    };
    let valid: Vec<bool> = seqs.iter().map(|s| s.as_deref().is_some_and(is_perm)).collect();
    let first = valid
        .iter()
        .position(|&v| v)
        .ok_or_else(|| Error::NoValidIterations(format!("{level:?}: every sequence failed the permutation check")))?;
    // group label -> final label, chosen so the first valid iteration is unchanged
    let anchor = seqs[first].clone().expect("valid");
    let mut to_final = vec![0; target_k];
    for (old, &grp) in anchor.iter().enumerate() {
        to_final[grp] = old;
    }
    let mut out = samples.to_vec();
    for (t, state) in out.iter_mut().enumerate() {
        if valid[t] {
            let seq: Vec<usize> = seqs[t].as_ref().expect("valid").iter().map(|&g| to_final[g]).collect();
            if seq.iter().enumerate().any(|(i, &s)| i != s) {
                permute(state, level, &seq);
            }
        }
    }
    Ok(Relabelled { samples: out, valid })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignedPartition {
    pub labels: Vec<usize>,
    /// Estimated label -> relabelled-draw label.
    pub map: BTreeMap<usize, usize>,
    /// Share of draws whose best map equals the chosen one.
    pub support: f64,
    /// Several maps shared the top count; the lexicographically smallest won.
    pub tie: bool,
}

/// Maps the point-estimate labels onto the labels of the relabelled draws using
/// the most frequent best-matching map.
pub fn align_reference_partition(c_hat: &[usize], draws: &[&[usize]]) -> Result<AlignedPartition> {
    if draws.is_empty() {
        return Err(validation("alignment needs at least one draw"));
    }
    let mut tally: BTreeMap<Vec<(usize, usize)>, usize> = BTreeMap::new();
    for d in draws {
        let m = match_labels(c_hat, d)?;
        *tally.entry(m.into_iter().collect()).or_default() += 1;
    }
    let top = *tally.values().max().expect("non-empty tally");
    let winners: Vec<&Vec<(usize, usize)>> = tally.iter().filter(|(_, &c)| c == top).map(|(k, _)| k).collect();
    let tie = winners.len() > 1;
    if tie {
        log::warn!("reference alignment: {} maps tie for the mode, taking the smallest", winners.len());
    }
    let map: BTreeMap<usize, usize> = winners[0].iter().copied().collect();
    Ok(AlignedPartition {
        labels: c_hat.iter().map(|l| map[l]).collect(),
        map,
        support: top as f64 / draws.len() as f64,
        tie,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcrustesAligned {
    pub draws: Vec<Vec<Point>>,
    pub transforms: Vec<Similarity>,
    pub residuals: Vec<f64>,
}

/// Fits a similarity map of every draw onto `reference` and applies it.
pub fn procrustes_align(draws: &[Vec<Point>], reference: &[Point]) -> Result<ProcrustesAligned> {
    if draws.iter().any(|d| d.len() != reference.len()) {
        return Err(validation("latent-space draws and reference differ in size"));
    }
    let mut out = ProcrustesAligned { draws: Vec::new(), transforms: Vec::new(), residuals: Vec::new() };
    for d in draws {
        let fit = procrustes_fit(d, reference);
        out.draws.push(fit.transform.apply_all(d));
        out.transforms.push(fit.transform);
        out.residuals.push(fit.residual);
    }
    Ok(out)
}

/// Moves node-cluster parameters into an aligned frame: means follow the full
/// map, variances scale with its square.
pub fn transform_cluster_params(t: &Similarity, mu: &[Point], sigma2: &[Point]) -> (Vec<Point>, Vec<Point>) {
    let s2 = t.scale * t.scale;
    (t.apply_all(mu), sigma2.iter().map(|v| [v[0] * s2, v[1] * s2]).collect())
}
