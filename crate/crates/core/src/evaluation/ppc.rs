//! Posterior predictive replicates and their summaries.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{metric_binary, metric_count};
use super::scenario::draw_edge;
use super::schieber::schieber_distance;
use crate::data::{Multiplex, Network};
use crate::distributions::EdgeFamily;
use crate::error::{validation, Result};
use crate::linalg::sq_dist;
use crate::model::ModelState;

/// One simulated multiplex plus the edge probabilities it was drawn from.
#[derive(Clone, Debug)]
pub struct Replicate {
    pub multiplex: Multiplex,
    /// Per network, P(y > 0) in dyad order.
    pub tie_probs: Vec<Vec<f64>>,
}

fn tie_probability(eta: f64, family: EdgeFamily) -> f64 {
    match family {
        EdgeFamily::Binary => 1.0 / (1.0 + (-eta).exp()),
        EdgeFamily::Count => -(-eta.exp()).exp_m1(),
    }
}

/// Regenerates every network from its allocated component for each of the
/// last `r` samples. Replicate `i` draws from its own generator stream so the
/// output does not depend on the thread count.
pub fn ppc_simulate(samples: &[ModelState], y: &Multiplex, r: usize, seed: u64) -> Result<Vec<Replicate>> {
    if r == 0 {
        return Err(validation("at least one replicate is needed"));
    }
    if r > samples.len() {
        return Err(validation(format!("{r} replicates requested but the trace holds {} samples", samples.len())));
    }
    let n = y.n_nodes();
    let family = y.family();
    let directed = y.is_directed();
    for s in samples {
        if s.c.len() != y.n_layers() || s.n_nodes() != n {
            return Err(validation("trace dimensions do not match the data"));
        }
    }
    let tail = &samples[samples.len() - r..];
    tail.par_iter()
        .enumerate()
        .map(|(idx, state)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64);
            let mut nets = Vec::with_capacity(y.n_layers());
            let mut probs = Vec::with_capacity(y.n_layers());
            for &g in &state.c {
                let z = &state.comps[g].z;
                let mut w = vec![0u32; n * n];
                let mut p = Vec::new();
                for (i, j) in crate::data::Dyads::new(n, directed) {
                    let eta = state.alpha - sq_dist(z[i], z[j]);
                    p.push(tie_probability(eta, family));
                    let v = draw_edge(eta, family, &mut rng);
                    w[i * n + j] = v;
                    if !directed {
                        w[j * n + i] = v;
                    }
                }
                nets.push(Network::new(n, w, directed, family)?);
                probs.push(p);
            }
            Ok(Replicate { multiplex: Multiplex::new(nets, y.labels().to_vec())?, tie_probs: probs })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpcRow {
    pub network: String,
    pub replicate: usize,
    pub metric: String,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub median: f64,
    pub iqr: f64,
    pub mean: f64,
    pub sd: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
        Some(Self { n, median: quantile(&v, 0.5), iqr: quantile(&v, 0.75) - quantile(&v, 0.25), mean, sd })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmptyReplicate {
    pub network: String,
    pub replicate: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpcReport {
    pub family: EdgeFamily,
    pub n_replicates: usize,
    pub rows: Vec<PpcRow>,
    /// network -> metric -> summary
    pub summary: BTreeMap<String, BTreeMap<String, Summary>>,
    /// Replicated networks without a single edge. They stay in the metrics.
    pub empty_replicates: Vec<EmptyReplicate>,
    /// Count family only: network -> (replicate, log count) pairs; replicate
    /// `None` marks the observed network.
    #[serde(skip)]
    pub ecdf: BTreeMap<String, Vec<(Option<usize>, f64)>>,
}

impl PpcReport {
    pub fn values(&self, network: &str, metric: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.network == network && r.metric == metric).map(|r| r.value).collect()
    }
}

/// Metric set follows the edge family: PR-AUC, F1, density, Hamming and
/// Schieber distance for binary data; MAD, TNR and log-count ECDFs for counts.
pub fn ppc_report(y: &Multiplex, replicates: &[Replicate]) -> Result<PpcReport> {
    let family = y.family();
    let mut rows = Vec::new();
    let mut empty = Vec::new();
    let mut ecdf: BTreeMap<String, Vec<(Option<usize>, f64)>> = BTreeMap::new();
    for (m, label) in y.labels().iter().enumerate() {
        let obs = y.get(m);
        if family == EdgeFamily::Count {
            let own = metric_count(obs, obs)?;
            ecdf.entry(label.clone()).or_default().extend(own.ecdf.into_iter().map(|v| (None, v)));
        }
        let per_rep: Vec<Vec<(String, f64)>> = replicates
            .par_iter()
            .map(|rep| -> Result<Vec<(String, f64)>> {
                let r = rep.multiplex.get(m);
                let mut out = Vec::new();
                match family {
                    EdgeFamily::Binary => {
                        let b = metric_binary(obs, r, &rep.tie_probs[m])?;
                        if let Some(v) = b.pr_auc {
                            out.push(("pr_auc".to_string(), v));
                        }
                        out.push(("f1".to_string(), b.f1));
                        out.push(("density_sq_diff".to_string(), b.density_sq_diff));
                        out.push(("hamming".to_string(), b.hamming));
                        out.push(("schieber".to_string(), schieber_distance(obs, r)));
                    }
                    EdgeFamily::Count => {
                        let c = metric_count(obs, r)?;
                        out.push(("mad".to_string(), c.mad));
                        if let Some(v) = c.tnr {
                            out.push(("tnr".to_string(), v));
                        }
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        for (idx, (rep, metrics)) in replicates.iter().zip(per_rep).enumerate() {
            let r = rep.multiplex.get(m);
            if r.weights().iter().all(|&v| v == 0) {
                empty.push(EmptyReplicate { network: label.clone(), replicate: idx });
            }
            if family == EdgeFamily::Count {
                let list = ecdf.entry(label.clone()).or_default();
                let mut logs: Vec<f64> =
                    r.dyads().map(|(i, j)| r.get(i, j)).filter(|&v| v > 0).map(|v| (v as f64).ln()).collect();
                logs.sort_by(f64::total_cmp);
                list.extend(logs.into_iter().map(|v| (Some(idx), v)));
            }
            for (metric, value) in metrics {
                rows.push(PpcRow { network: label.clone(), replicate: idx, metric, value });
            }
        }
    }
    let mut grouped: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for r in &rows {
        grouped.entry(r.network.clone()).or_default().entry(r.metric.clone()).or_default().push(r.value);
    }
    let summary = grouped
        .into_iter()
        .map(|(net, ms)| {
            let s = ms.into_iter().filter_map(|(k, v)| Summary::of(&v).map(|s| (k, s))).collect();
            (net, s)
        })
        .collect();
    Ok(PpcReport { family, n_replicates: replicates.len(), rows, summary, empty_replicates: empty, ecdf })
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    family: EdgeFamily,
    n_replicates: usize,
    networks: &'a BTreeMap<String, BTreeMap<String, Summary>>,
    empty_replicates: &'a [EmptyReplicate],
}

/// Writes `ppc_report.csv`, `ppc_summary.json` and, for counts, `ecdf/<network>.csv`.
pub fn write_ppc_report(dir: &Path, report: &PpcReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("ppc_report.csv"))?;
    for r in &report.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let summary = SummaryFile {
        family: report.family,
        n_replicates: report.n_replicates,
        networks: &report.summary,
        empty_replicates: &report.empty_replicates,
    };
    fs::write(dir.join("ppc_summary.json"), serde_json::to_string_pretty(&summary)?)?;
    if report.family == EdgeFamily::Count {
        let edir = dir.join("ecdf");
        fs::create_dir_all(&edir)?;
        for (net, pts) in &report.ecdf {
            let mut w = csv::Writer::from_path(edir.join(format!("{net}.csv")))?;
            w.write_record(["source", "replicate", "log_count"])?;
            for (rep, v) in pts {
                let (src, idx) = match rep {
                    None => ("observed", String::new()),
                    Some(i) => ("replicate", i.to_string()),
                };
                w.write_record([src, idx.as_str(), format!("{v:?}").as_str()])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Reads `ppc_report.csv` back into rows.
pub fn read_ppc_rows(path: &Path) -> Result<Vec<PpcRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_quartiles() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert!((s.iqr - 1.5).abs() < 1e-12);
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn count_tie_probability() {
        assert!((tie_probability(0.0, EdgeFamily::Count) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(tie_probability(0.0, EdgeFamily::Binary), 0.5);
    }
}
