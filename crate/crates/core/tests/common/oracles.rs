//! Brute-force reference implementations shared by the integration tests and
//! the acceptance harness. Nothing here calls into the library's metric code.
#![allow(dead_code)]

use lapcom::data::Network;

/// Dyads of a network as (i, j): `i < j` when undirected, all `i != j` otherwise.
pub fn dyad_list(n: usize, directed: bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && (directed || i < j) {
                out.push((i, j));
            }
        }
    }
    out
}

pub fn dyad_values(net: &Network) -> Vec<u32> {
    dyad_list(net.n_nodes(), net.is_directed()).iter().map(|&(i, j)| net.weights()[i * net.n_nodes() + j]).collect()
}

/// Adjusted Rand index from explicit pair counting.
pub fn ari(p: &[usize], q: &[usize]) -> f64 {
    let n = p.len();
    let (mut ss, mut sd, mut ds, mut dd) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            match (p[i] == p[j], q[i] == q[j]) {
                (true, true) => ss += 1.0,
                (true, false) => sd += 1.0,
                (false, true) => ds += 1.0,
                (false, false) => dd += 1.0,
            }
        }
    }
    let total = ss + sd + ds + dd;
    let cross = (ss + sd) * (ss + ds) + (dd + sd) * (dd + ds);
    let denom = total * total - cross;
    if denom == 0.0 {
        return if sd == 0.0 && ds == 0.0 { 1.0 } else { 0.0 };
    }
    (total * (ss + dd) - cross) / denom
}

/// Largest number of items that any injective relabelling of `est` can place
/// on their `reference` label, by enumerating all assignments.
pub fn best_agreement(est: &[usize], reference: &[usize]) -> usize {
    let mut el: Vec<usize> = est.to_vec();
    el.sort_unstable();
    el.dedup();
    let mut rl: Vec<usize> = reference.to_vec();
    rl.sort_unstable();
    rl.dedup();
    fn rec(k: usize, el: &[usize], rl: &[usize], used: &mut Vec<bool>, est: &[usize], reference: &[usize]) -> usize {
        if k == el.len() {
            return 0;
        }
        // leave label k unmatched
        let mut best = rec(k + 1, el, rl, used, est, reference);
        for r in 0..rl.len() {
            if used[r] {
                continue;
            }
            used[r] = true;
            let hits = est.iter().zip(reference).filter(|(&a, &b)| a == el[k] && b == rl[r]).count();
            best = best.max(hits + rec(k + 1, el, rl, used, est, reference));
            used[r] = false;
        }
        best
    }
    rec(0, &el, &rl, &mut vec![false; rl.len()], est, reference)
}

/// Trapezoidal area under the precision-recall curve from (0, 1), predicting
/// positive at every distinct score threshold.
pub fn pr_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 {
        return None;
    }
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut pts = vec![(0.0, 1.0)];
    for t in thresholds {
        let tp = scores.iter().zip(labels).filter(|(&s, &l)| s >= t && l).count() as f64;
        let fp = scores.iter().zip(labels).filter(|(&s, &l)| s >= t && !l).count() as f64;
        pts.push((tp / pos as f64, tp / (tp + fp)));
    }
    let mut area = 0.0;
    for w in pts.windows(2) {
        area += (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0;
    }
    Some(area)
}

pub fn f1(obs: &[bool], pred: &[bool]) -> f64 {
    let tp = obs.iter().zip(pred).filter(|(&o, &p)| o && p).count() as f64;
    let pp = pred.iter().filter(|&&p| p).count() as f64;
    let op = obs.iter().filter(|&&o| o).count() as f64;
    if pp + op == 0.0 {
        return 1.0;
    }
    let precision = if pp > 0.0 { tp / pp } else { 0.0 };
    let recall = if op > 0.0 { tp / op } else { 0.0 };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn hamming(a: &[bool], b: &[bool]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as f64 / a.len() as f64
}

pub fn mad(a: &[u32], b: &[u32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x as i64 - y as i64).abs() as f64).sum::<f64>() / a.len() as f64
}

pub fn tnr(obs: &[u32], rep: &[u32]) -> Option<f64> {
    let neg: Vec<usize> = (0..obs.len()).filter(|&i| obs[i] == 0).collect();
    if neg.is_empty() {
        return None;
    }
    Some(neg.iter().filter(|&&i| rep[i] == 0).count() as f64 / neg.len() as f64)
}

fn entropy2(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

fn jsd_bits(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    (entropy2(&m) - 0.5 * entropy2(p) - 0.5 * entropy2(q)).max(0.0)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

fn alpha_profile(adj: &[Vec<bool>]) -> Vec<f64> {
    let n = adj.len();
    let nf = n as f64;
    let e: Vec<f64> = adj.iter().map(|r| r.iter().filter(|&&x| x).count() as f64 / (nf - 1.0)).collect();
    // (I - A^T / N) x = e
    let m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (i == j) as u8 as f64 - adj[j][i] as u8 as f64 / nf).collect())
        .collect();
    let mut r: Vec<f64> = solve(m, e).iter().map(|x| x / (nf * nf)).collect();
    r.sort_by(f64::total_cmp);
    let rest = (1.0 - r.iter().sum::<f64>()).max(0.0);
    r.push(rest);
    r
}

struct Profile {
    pdf: Vec<f64>,
    nnd: f64,
    alpha: Vec<f64>,
    alpha_c: Vec<f64>,
}

fn profile(adj: &[Vec<bool>]) -> Profile {
    let n = adj.len();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        for j in 0..n {
            if adj[i][j] {
                d[i][j] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (1..=n)
                .map(|cat| {
                    (0..n).filter(|&j| j != i && (if d[i][j] >= inf { n } else { d[i][j] }) == cat).count() as f64
                        / (n - 1) as f64
                })
                .collect()
        })
        .collect();
    let pdf: Vec<f64> = (0..n).map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / n as f64).collect();
    let support = pdf[..n - 1].iter().filter(|&&x| x > 0.0).count();
    let norm = ((support + 1).max(2) as f64).log2();
    let mean_h: f64 = rows.iter().map(|r| entropy2(r)).sum::<f64>() / n as f64;
    let nnd = (entropy2(&pdf) - mean_h).max(0.0) / norm;
    let comp: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i != j && !adj[i][j]).collect()).collect();
    Profile { pdf, nnd, alpha: alpha_profile(adj), alpha_c: alpha_profile(&comp) }
}

/// Symmetrized binary adjacency, padded with isolated nodes up to `n`.
pub fn adjacency(net: &Network, n: usize) -> Vec<Vec<bool>> {
    let m = net.n_nodes();
    let w = net.weights();
    (0..n)
        .map(|i| (0..n).map(|j| i < m && j < m && i != j && (w[i * m + j] > 0 || w[j * m + i] > 0)).collect())
        .collect()
}

/// Dissimilarity with weights (0.45, 0.45, 0.10).
pub fn schieber(a: &Network, b: &Network) -> f64 {
    let n = a.n_nodes().max(b.n_nodes());
    let (pa, pb) = (profile(&adjacency(a, n)), profile(&adjacency(b, n)));
    0.45 * jsd_bits(&pa.pdf, &pb.pdf).sqrt()
        + 0.45 * (pa.nnd.sqrt() - pb.nnd.sqrt()).abs()
        + 0.10 * (jsd_bits(&pa.alpha, &pb.alpha).sqrt() / 2.0 + jsd_bits(&pa.alpha_c, &pb.alpha_c).sqrt() / 2.0)
}
