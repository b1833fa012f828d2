//! Partition agreement and predictive-check metrics.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::data::Network;
use crate::distributions::EdgeFamily;
use crate::error::{validation, Result};

pub use crate::linalg::procrustes_correlation;

fn comb2(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index from the contingency table.
///
/// When the index is undefined (both partitions trivial in the same way) it is
/// 1 for identical partitions.
pub fn ari(p1: &[usize], p2: &[usize]) -> Result<f64> {
    if p1.len() != p2.len() {
        return Err(validation(format!("partitions have lengths {} and {}", p1.len(), p2.len())));
    }
    let n = p1.len();
    let mut table: HashMap<(usize, usize), usize> = HashMap::new();
    let mut rows: HashMap<usize, usize> = HashMap::new();
    let mut cols: HashMap<usize, usize> = HashMap::new();
    for (&a, &b) in p1.iter().zip(p2) {
        *table.entry((a, b)).or_default() += 1;
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
    }
    let index: f64 = table.values().map(|&v| comb2(v)).sum();
    let a: f64 = rows.values().map(|&v| comb2(v)).sum();
    let b: f64 = cols.values().map(|&v| comb2(v)).sum();
    let total = comb2(n);
    let expected = if total > 0.0 { a * b / total } else { 0.0 };
    let max = (a + b) / 2.0;
    let denom = max - expected;
    if denom == 0.0 {
        let same = table.len() == rows.len() && table.len() == cols.len();
        return Ok(if same { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

/// Minimum-cost assignment of rows to columns (rows <= columns), returning the
/// column of each row. Shortest augmenting path with potentials.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "hungarian needs rows <= columns");
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=m {
        if p[j] > 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

fn sorted_labels(p: &[usize]) -> Vec<usize> {
    let mut v = p.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Injective map from estimated to reference labels maximizing the number of
/// items whose mapped label equals the reference label. Estimated labels left
/// without a partner get fresh labels above the largest reference label.
pub fn match_labels(p_est: &[usize], p_ref: &[usize]) -> Result<BTreeMap<usize, usize>> {
    if p_est.len() != p_ref.len() {
        return Err(validation(format!("partitions have lengths {} and {}", p_est.len(), p_ref.len())));
    }
    let est = sorted_labels(p_est);
    let rf = sorted_labels(p_ref);
    let size = est.len().max(rf.len());
    let mut counts = vec![vec![0.0; size]; size];
    for (&a, &b) in p_est.iter().zip(p_ref) {
        let i = est.binary_search(&a).expect("label present");
        let j = rf.binary_search(&b).expect("label present");
        counts[i][j] += 1.0;
    }
    let cost: Vec<Vec<f64>> = counts.iter().map(|r| r.iter().map(|c| -c).collect()).collect();
    let assign = hungarian(&cost);
    let mut next_fresh = rf.last().map_or(0, |x| x + 1);
    let mut map = BTreeMap::new();
    for (i, &lab) in est.iter().enumerate() {
        let j = assign[i];
        let target = if j < rf.len() {
            rf[j]
        } else {
            let t = next_fresh;
            next_fresh += 1;
            t
        };
        map.insert(lab, target);
    }
    Ok(map)
}

/// Relabels `p_est` with the map from [`match_labels`].
pub fn apply_label_map(p: &[usize], map: &BTreeMap<usize, usize>) -> Vec<usize> {
    p.iter().map(|l| map.get(l).copied().unwrap_or(*l)).collect()
}

/// Area under the precision-recall curve by the trapezoidal rule, starting at
/// recall 0 with precision 1. `None` when there are no positives.
pub fn pr_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len(), "scores and labels must align");
    let total_pos = labels.iter().filter(|&&l| l).count();
    if total_pos == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 1.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < idx.len() {
        let thr = scores[idx[k]];
        while k < idx.len() && scores[idx[k]] == thr {
            if labels[idx[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push((tp as f64 / total_pos as f64, tp as f64 / (tp + fp) as f64));
    }
    Some(points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum())
}

/// F1 score of predicted versus observed edges; 1 when neither has an edge.
pub fn f1_score(observed: &[bool], predicted: &[bool]) -> f64 {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&o, &p) in observed.iter().zip(predicted) {
        match (o, p) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            _ => {}
        }
    }
    if tp + fp + fn_ == 0 {
        1.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

fn dyad_values(net: &Network) -> Vec<u32> {
    net.dyads().map(|(i, j)| net.get(i, j)).collect()
}

fn same_shape(obs: &Network, rep: &Network) -> Result<()> {
    if obs.n_nodes() != rep.n_nodes() || obs.is_directed() != rep.is_directed() {
        return Err(validation("observed and replicate networks differ in size or direction"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub pr_auc: Option<f64>,
    pub f1: f64,
    pub density_sq_diff: f64,
    pub hamming: f64,
}

/// Metrics of a binary replicate. `tie_probs` lists the replicate's edge
/// probabilities in dyad order and feeds the precision-recall curve.
pub fn metric_binary(obs: &Network, rep: &Network, tie_probs: &[f64]) -> Result<BinaryMetrics> {
    if obs.family() != EdgeFamily::Binary || rep.family() != EdgeFamily::Binary {
        return Err(validation("binary metrics need binary networks"));
    }
    same_shape(obs, rep)?;
    let o: Vec<bool> = dyad_values(obs).iter().map(|&y| y > 0).collect();
    let r: Vec<bool> = dyad_values(rep).iter().map(|&y| y > 0).collect();
    if tie_probs.len() != o.len() {
        return Err(validation(format!("{} tie probabilities for {} dyads", tie_probs.len(), o.len())));
    }
    let nd = o.len().max(1) as f64;
    let mismatches = o.iter().zip(&r).filter(|(a, b)| a != b).count();
    Ok(BinaryMetrics {
        pr_auc: pr_auc(tie_probs, &o),
        f1: f1_score(&o, &r),
        density_sq_diff: (rep.density() - obs.density()).powi(2),
        hamming: mismatches as f64 / nd,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountMetrics {
    pub mad: f64,
    /// `None` when the observed network has no zero dyads.
    pub tnr: Option<f64>,
    /// Sorted logs of the replicate's positive counts.
    pub ecdf: Vec<f64>,
}

pub fn metric_count(obs: &Network, rep: &Network) -> Result<CountMetrics> {
    if obs.family() != EdgeFamily::Count || rep.family() != EdgeFamily::Count {
        return Err(validation("count metrics need count networks"));
    }
    same_shape(obs, rep)?;
    let o = dyad_values(obs);
    let r = dyad_values(rep);
    let nd = o.len().max(1) as f64;
    let mad = o.iter().zip(&r).map(|(&a, &b)| (a as f64 - b as f64).abs()).sum::<f64>() / nd;
    let zeros = o.iter().filter(|&&y| y == 0).count();
    let tn = o.iter().zip(&r).filter(|(&a, &b)| a == 0 && b == 0).count();
    let tnr = (zeros > 0).then(|| tn as f64 / zeros as f64);
    let mut ecdf: Vec<f64> = r.iter().filter(|&&y| y > 0).map(|&y| (y as f64).ln()).collect();
    ecdf.sort_by(f64::total_cmp);
    Ok(CountMetrics { mad, tnr, ecdf })
}
