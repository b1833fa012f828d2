//! Deterministic k-means, Gaussian mixture EM and average-linkage clustering.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Relabels so that clusters are numbered `0..k` in order of first appearance.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<(usize, usize)> = Vec::new();
    labels
        .iter()
        .map(|&l| match map.iter().find(|(from, _)| *from == l) {
            Some(&(_, to)) => to,
            None => {
                let to = map.len();
                map.push((l, to));
                to
            }
        })
        .collect()
}

pub fn n_distinct(labels: &[usize]) -> usize {
    let mut v = labels.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

#[derive(Clone, Debug)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    /// `k * dim` row-major centres.
    pub centers: Vec<f64>,
    pub inertia: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self { restarts: 25, max_iter: 300, tol: 1e-8 }
    }
}

#[inline]
fn sqd(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's k-means with k-means++ seeding, best of `restarts` runs by inertia.
///
/// `data` holds `n` rows of length `dim`. Every cluster is non-empty in the
/// result whenever `k <= n`: an empty cluster takes the point farthest from its
/// centre, with the highest index winning ties.
pub fn kmeans<R: Rng + ?Sized>(data: &[f64], dim: usize, k: usize, opts: KMeansOptions, rng: &mut R) -> KMeansFit {
    assert!(dim > 0 && data.len() % dim == 0, "data length must be a multiple of dim");
    let n = data.len() / dim;
    assert!(k >= 1 && k <= n, "need 1 <= k <= n (k={k}, n={n})");
    let mut best: Option<KMeansFit> = None;
    for _ in 0..opts.restarts.max(1) {
        let fit = kmeans_once(data, dim, k, opts, rng);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia - 1e-12 * b.inertia.abs().max(1.0)) {
            best = Some(fit);
        }
    }
    best.expect("at least one restart")
}

fn seed_centers<R: Rng + ?Sized>(data: &[f64], dim: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let n = data.len() / dim;
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| sqd(row(i), row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // all remaining points coincide with a centre: take the first unused index
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        } else {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            pick
        };
        chosen.push(next);
        for i in 0..n {
            d2[i] = d2[i].min(sqd(row(i), row(next)));
        }
    }
    chosen
}

fn kmeans_once<R: Rng + ?Sized>(data: &[f64], dim: usize, k: usize, opts: KMeansOptions, rng: &mut R) -> KMeansFit {
    let n = data.len() / dim;
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut centers: Vec<f64> = seed_centers(data, dim, k, rng).iter().flat_map(|&i| row(i).to_vec()).collect();
    let mut labels = vec![0usize; n];
    let mut prev = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let mut inertia = 0.0;
        for i in 0..n {
            let (mut bk, mut bd) = (0, f64::INFINITY);
            for c in 0..k {
                let d = sqd(row(i), &centers[c * dim..(c + 1) * dim]);
                if d < bd {
                    bd = d;
                    bk = c;
                }
            }
            labels[i] = bk;
            inertia += bd;
        }
        repair_empty(data, dim, k, &mut labels, &centers);
        centers = compute_centers(data, dim, k, &labels);
        if (prev - inertia).abs() <= opts.tol * prev.abs().max(1e-300) || inertia == 0.0 {
            break;
        }
        prev = inertia;
    }
    let inertia = (0..n).map(|i| sqd(row(i), &centers[labels[i] * dim..(labels[i] + 1) * dim])).sum();
    KMeansFit { labels, centers, inertia }
}

fn compute_centers(data: &[f64], dim: usize, k: usize, labels: &[usize]) -> Vec<f64> {
    let mut centers = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for d in 0..dim {
            centers[l * dim + d] += data[i * dim + d];
        }
    }
    for c in 0..k {
        for d in 0..dim {
            centers[c * dim + d] /= counts[c].max(1) as f64;
        }
    }
    centers
}

/// Moves points into empty clusters so that every label in `0..k` is used.
pub fn repair_empty(data: &[f64], dim: usize, k: usize, labels: &mut [usize], centers: &[f64]) {
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else { return };
        let mut pick = None;
        let mut best = -1.0;
        for (i, &l) in labels.iter().enumerate() {
            if counts[l] < 2 {
                continue;
            }
            let d = sqd(&data[i * dim..(i + 1) * dim], &centers[l * dim..(l + 1) * dim]);
            if d >= best {
                best = d;
                pick = Some(i);
            }
        }
        match pick {
            Some(i) => labels[i] = empty,
            None => return,
        }
    }
}

/// EM for a Gaussian mixture with full covariances, started from k-means.
/// Returns hard labels (highest responsibility) with every cluster non-empty.
pub fn gmm<R: Rng + ?Sized>(data: &[f64], dim: usize, k: usize, max_iter: usize, rng: &mut R) -> Vec<usize> {
    let n = data.len() / dim;
    let init = kmeans(data, dim, k, KMeansOptions::default(), rng);
    if k == 1 {
        return vec![0; n];
    }
    let x: Vec<DVector<f64>> = (0..n).map(|i| DVector::from_column_slice(&data[i * dim..(i + 1) * dim])).collect();
    let mut resp = DMatrix::<f64>::zeros(n, k);
    for (i, &l) in init.labels.iter().enumerate() {
        resp[(i, l)] = 1.0;
    }
    let reg = 1e-6;
    let mut prev_ll = f64::NEG_INFINITY;
    for _ in 0..max_iter {
        // M step
        let mut weights = vec![0.0; k];
        let mut means = vec![DVector::<f64>::zeros(dim); k];
        let mut covs = vec![DMatrix::<f64>::zeros(dim, dim); k];
        for c in 0..k {
            let nk: f64 = resp.column(c).sum();
            weights[c] = nk.max(1e-300) / n as f64;
            for i in 0..n {
                means[c] += &x[i] * resp[(i, c)];
            }
            means[c] /= nk.max(1e-300);
            for i in 0..n {
                let d = &x[i] - &means[c];
                covs[c] += &d * d.transpose() * resp[(i, c)];
            }
            covs[c] /= nk.max(1e-300);
            for d in 0..dim {
                covs[c][(d, d)] += reg;
            }
        }
        // E step
        let mut ll = 0.0;
        let mut logp = vec![0.0; k];
        let chols: Vec<_> = covs
            .iter()
            .map(|s| {
                s.clone().cholesky().unwrap_or_else(|| {
                    DMatrix::<f64>::identity(dim, dim).cholesky().expect("identity is positive definite")
                })
            })
            .collect();
        for i in 0..n {
            for c in 0..k {
                let d = &x[i] - &means[c];
                let sol = chols[c].solve(&d);
                let logdet = 2.0 * chols[c].l().diagonal().map(f64::ln).sum();
                logp[c] = weights[c].ln() - 0.5 * (d.dot(&sol) + logdet + dim as f64 * crate::distributions::LN_2PI);
            }
            let z = crate::distributions::logsumexp(&logp);
            ll += z;
            for c in 0..k {
                resp[(i, c)] = (logp[c] - z).exp();
            }
        }
        if (ll - prev_ll).abs() < 1e-8 * ll.abs().max(1.0) {
            break;
        }
        prev_ll = ll;
    }
    let mut labels: Vec<usize> = (0..n)
        .map(|i| {
            let r = resp.row(i);
            (0..k).fold(0, |b, c| if r[c] > r[b] { c } else { b })
        })
        .collect();
    let centers = compute_centers(data, dim, k, &labels);
    repair_empty(data, dim, k, &mut labels, &centers);
    labels
}

/// Average-linkage (UPGMA) agglomeration of a symmetric dissimilarity matrix.
///
/// Returns labels for every cut: entry `c - 1` holds the partition into `c`
/// clusters, canonically labelled. Ties merge the lexicographically first pair.
pub fn average_linkage_cuts(d: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = d.nrows();
    if n == 0 {
        return Vec::new();
    }
    let mut dist = d.clone();
    let mut size = vec![1usize; n];
    let mut active: Vec<bool> = vec![true; n];
    let mut member: Vec<usize> = (0..n).collect();
    let mut cuts = vec![Vec::new(); n];
    cuts[n - 1] = canonical_labels(&member);
    for n_clusters in (1..n).rev() {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if active[j] && dist[(i, j)] < best.2 {
                    best = (i, j, dist[(i, j)]);
                }
            }
        }
        let (a, b, _) = best;
        for k in 0..n {
            if active[k] && k != a && k != b {
                let v = (size[a] as f64 * dist[(a, k)] + size[b] as f64 * dist[(b, k)]) / (size[a] + size[b]) as f64;
                dist[(a, k)] = v;
                dist[(k, a)] = v;
            }
        }
        size[a] += size[b];
        active[b] = false;
        for m in member.iter_mut() {
            if *m == b {
                *m = a;
            }
        }
        cuts[n_clusters - 1] = canonical_labels(&member);
    }
    cuts
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn canonical() {
        assert_eq!(canonical_labels(&[4, 4, 2, 7, 2]), vec![0, 0, 1, 2, 1]);
        assert_eq!(n_distinct(&[4, 4, 2, 7, 2]), 3);
    }

    #[test]
    fn kmeans_two_blobs() {
        let data = vec![0.0, 0.0, 0.1, 0.0, 0.0, 0.1, 5.0, 5.0, 5.1, 5.0, 5.0, 5.1];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let fit = kmeans(&data, 2, 2, KMeansOptions::default(), &mut rng);
        let l = canonical_labels(&fit.labels);
        assert_eq!(l, vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn kmeans_identical_points_still_splits() {
        let data = vec![1.0, 2.0, 1.0, 2.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let fit = kmeans(&data, 2, 2, KMeansOptions::default(), &mut rng);
        assert_eq!(n_distinct(&fit.labels), 2);
    }

    #[test]
    fn gmm_two_blobs() {
        let mut data = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for c in 0..2 {
            for _ in 0..30 {
                data.push(c as f64 * 6.0 + rng.random::<f64>());
                data.push(rng.random::<f64>());
            }
        }
        let l = canonical_labels(&gmm(&data, 2, 2, 100, &mut rng));
        assert!(l[..30].iter().all(|&x| x == 0));
        assert!(l[30..].iter().all(|&x| x == 1));
    }

    #[test]
    fn linkage_cuts() {
        let pts = [0.0, 0.2, 5.0, 5.3, 20.0];
        let d = DMatrix::from_fn(5, 5, |i, j| f64::abs(pts[i] - pts[j]));
        let cuts = average_linkage_cuts(&d);
        assert_eq!(cuts[0], vec![0; 5]);
        assert_eq!(cuts[1], vec![0, 0, 0, 0, 1]);
        assert_eq!(cuts[2], vec![0, 0, 1, 1, 2]);
        assert_eq!(cuts[4], vec![0, 1, 2, 3, 4]);
    }
}
