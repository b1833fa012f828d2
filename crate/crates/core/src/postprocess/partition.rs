//! Posterior similarity and the minimum expected variation of information partition.

use std::collections::HashSet;

use nalgebra::DMatrix;

use crate::cluster::{average_linkage_cuts, canonical_labels, n_distinct};
use crate::error::{validation, Result};

/// Sampled partitions of `n_items` items, one row per draw, canonically labelled.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionDraws {
    draws: Vec<Vec<usize>>,
    n_items: usize,
}

impl PartitionDraws {
    pub fn new(draws: Vec<Vec<usize>>) -> Result<Self> {
        let n_items = draws.first().map(Vec::len).ok_or_else(|| validation("no partition draws"))?;
        if draws.iter().any(|d| d.len() != n_items) {
            return Err(validation("partition draws have unequal lengths"));
        }
        Ok(Self { draws: draws.iter().map(|d| canonical_labels(d)).collect(), n_items })
    }

    pub fn draws(&self) -> &[Vec<usize>] {
        &self.draws
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

/// Fraction of draws placing each pair of items together.
pub fn posterior_similarity_matrix(draws: &PartitionDraws) -> DMatrix<f64> {
    let n = draws.n_items();
    let mut psm = DMatrix::zeros(n, n);
    for d in draws.draws() {
        for i in 0..n {
            for j in (i + 1)..n {
                if d[i] == d[j] {
                    psm[(i, j)] += 1.0;
                }
            }
        }
    }
    let t = draws.len() as f64;
    for i in 0..n {
        psm[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let v = psm[(i, j)] / t;
            psm[(i, j)] = v;
            psm[(j, i)] = v;
        }
    }
    psm
}

/// Jensen lower bound on the posterior expected variation of information (base 2).
pub fn vi_lower_bound(labels: &[usize], psm: &DMatrix<f64>) -> f64 {
    let n = labels.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut size = 0.0f64;
        let mut row = 0.0f64;
        let mut together = 0.0f64;
        for j in 0..n {
            let p = psm[(i, j)];
            row += p;
            if labels[j] == labels[i] {
                size += 1.0;
                together += p;
            }
        }
        total += size.log2() + row.log2() - 2.0 * together.log2();
    }
    total / n as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinViPartition {
    pub labels: Vec<usize>,
    pub n_clusters: usize,
    pub bound: f64,
}

/// Candidate minimizing [`vi_lower_bound`] among the sampled partitions and every
/// average-linkage cut of `1 - psm`. Ties go to fewer clusters, then to the
/// earlier candidate.
pub fn minvi_partition(draws: &PartitionDraws, psm: &DMatrix<f64>) -> MinViPartition {
    let n = draws.n_items();
    let dissim = psm.map(|p| 1.0 - p);
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut best: Option<MinViPartition> = None;
    let candidates = draws.draws().iter().cloned().chain(average_linkage_cuts(&dissim));
    for cand in candidates {
        if !seen.insert(cand.clone()) {
            continue;
        }
        let bound = vi_lower_bound(&cand, psm);
        let k = n_distinct(&cand);
        let better = match &best {
            None => true,
            Some(b) => {
                let tol = 1e-12 * b.bound.abs().max(1.0);
                bound < b.bound - tol || ((bound - b.bound).abs() <= tol && k < b.n_clusters)
            }
        };
        if better {
            best = Some(MinViPartition { labels: cand, n_clusters: k, bound });
        }
    }
    debug_assert!(best.as_ref().is_none_or(|b| b.labels.len() == n));
    best.expect("at least one draw")
}

/// Most frequent value; ties go to the smallest.
pub fn smallest_mode(values: &[usize]) -> Option<usize> {
    let max = *values.iter().max()?;
    let mut counts = vec![0usize; max + 1];
    for &v in values {
        counts[v] += 1;
    }
    let top = *counts.iter().max()?;
    counts.iter().position(|&c| c == top)
}
