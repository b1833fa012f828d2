//! Trace bundles on disk: `states/samples.csv`, `logpost.csv`, `accept.csv`
//! and `config.json` inside one directory per chain.
//!
//! `samples.csv` is wide: one row per stored iteration, with every
//! component-indexed column padded up to `G_max` and `K_max`. Unused cells are
//! empty. Allocation labels are written 1-based.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AcceptCounter, AcceptStats, ProposalScales, SamplerConfig, Trace};
use crate::error::{validation, Error, Result};
use crate::model::{Component, ModelState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub chain: usize,
    pub n_nodes: usize,
    pub n_networks: usize,
    pub scales: ProposalScales,
    pub config: SamplerConfig,
}

fn header(n: usize, m: usize, g_max: usize, k_max: usize) -> Vec<String> {
    let mut h: Vec<String> = ["iter", "G", "G_plus", "e", "alpha"].iter().map(|s| s.to_string()).collect();
    for g in 1..=g_max {
        h.push(format!("tau_{g}"));
        h.push(format!("log_tau_{g}"));
    }
    for i in 1..=m {
        h.push(format!("C_{i}"));
    }
    for g in 1..=g_max {
        h.push(format!("K_{g}"));
        h.push(format!("K_{g}_plus"));
        h.push(format!("w_{g}"));
        for k in 1..=k_max {
            h.push(format!("pi_{g}_{k}"));
            h.push(format!("log_pi_{g}_{k}"));
            h.push(format!("mu_{g}_{k}_1"));
            h.push(format!("mu_{g}_{k}_2"));
            h.push(format!("sigma2_{g}_{k}_1"));
            h.push(format!("sigma2_{g}_{k}_2"));
        }
        for i in 1..=n {
            h.push(format!("S_{g}_{i}"));
        }
        for i in 1..=n {
            h.push(format!("Z_{g}_{i}_1"));
            h.push(format!("Z_{g}_{i}_2"));
        }
    }
    h
}

fn f(x: f64) -> String {
    format!("{x:?}")
}

fn row(iter: usize, s: &ModelState, n: usize, g_max: usize, k_max: usize) -> Vec<String> {
    let mut r = vec![iter.to_string(), s.g.to_string(), s.g_plus.to_string(), f(s.e), f(s.alpha)];
    for g in 0..g_max {
        match s.log_tau.get(g) {
            Some(&lt) => {
                r.push(f(lt.exp()));
                r.push(f(lt));
            }
            None => r.extend([String::new(), String::new()]),
        }
    }
    r.extend(s.c.iter().map(|c| (c + 1).to_string()));
    for g in 0..g_max {
        let comp = s.comps.get(g);
        match comp {
            Some(c) => r.extend([c.k.to_string(), c.k_plus.to_string(), f(c.w)]),
            None => r.extend(std::iter::repeat_n(String::new(), 3)),
        }
        for k in 0..k_max {
            match comp.filter(|c| k < c.k) {
                Some(c) => r.extend([
                    f(c.log_pi[k].exp()),
                    f(c.log_pi[k]),
                    f(c.mu[k][0]),
                    f(c.mu[k][1]),
                    f(c.sigma2[k][0]),
                    f(c.sigma2[k][1]),
                ]),
                None => r.extend(std::iter::repeat_n(String::new(), 6)),
            }
        }
        match comp {
            Some(c) => r.extend(c.s.iter().map(|x| (x + 1).to_string())),
            None => r.extend(std::iter::repeat_n(String::new(), n)),
        }
        match comp {
            Some(c) => {
                for p in &c.z {
                    r.push(f(p[0]));
                    r.push(f(p[1]));
                }
            }
            None => r.extend(std::iter::repeat_n(String::new(), 2 * n)),
        }
    }
    r
}

/// Writes a trace bundle into `dir`.
pub fn write_trace(dir: &Path, trace: &Trace, n_nodes: usize, n_networks: usize) -> Result<()> {
    let g_max = trace.samples.iter().map(|s| s.g).max().unwrap_or(1).max(trace.config.hyper.g_max);
    let k_max = trace
        .samples
        .iter()
        .flat_map(|s| s.comps.iter().map(|c| c.k))
        .max()
        .unwrap_or(1)
        .max(trace.config.hyper.k_max);
    fs::create_dir_all(dir.join("states"))?;
    let mut w = csv::Writer::from_path(dir.join("states").join("samples.csv"))?;
    w.write_record(header(n_nodes, n_networks, g_max, k_max))?;
    for (it, s) in trace.iterations.iter().zip(&trace.samples) {
        w.write_record(row(*it, s, n_nodes, g_max, k_max))?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("logpost.csv"))?;
    w.write_record(["iter", "log_posterior"])?;
    for (it, lp) in trace.iterations.iter().zip(&trace.log_posterior) {
        w.write_record([it.to_string(), f(*lp)])?;
    }
    w.flush()?;

    let scales = [trace.scales.delta_z, trace.scales.delta_alpha, trace.scales.s_e, trace.scales.s_w];
    let mut w = csv::Writer::from_path(dir.join("accept.csv"))?;
    w.write_record(["block", "accepted", "proposed", "rate", "scale"])?;
    for ((name, c), sc) in trace.acceptance.blocks().iter().zip(scales) {
        w.write_record([name.to_string(), c.accepted.to_string(), c.proposed.to_string(), f(c.rate()), f(sc)])?;
    }
    w.flush()?;

    let meta = TraceMeta { chain: trace.chain, n_nodes, n_networks, scales: trace.scales, config: trace.config.clone() };
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

fn bad(dir: &Path, msg: impl Into<String>) -> Error {
    Error::Parse { path: dir.to_path_buf(), message: msg.into() }
}

/// Reads a bundle written by [`write_trace`].
pub fn read_trace(dir: &Path) -> Result<Trace> {
    let meta: TraceMeta = serde_json::from_str(&fs::read_to_string(dir.join("config.json"))?)?;
    let (n, m) = (meta.n_nodes, meta.n_networks);
    let path = dir.join("states").join("samples.csv");
    let mut rdr = csv::Reader::from_path(&path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let g_max = (1..).take_while(|g| col(&format!("tau_{g}")).is_some()).count();
    let k_max = (1..).take_while(|k| col(&format!("pi_1_{k}")).is_some()).count();
    let num = |rec: &csv::StringRecord, name: &str| -> Result<Option<f64>> {
        let i = col(name).ok_or_else(|| bad(&path, format!("missing column {name}")))?;
        let v = rec.get(i).unwrap_or("");
        if v.is_empty() {
            return Ok(None);
        }
        v.parse::<f64>().map(Some).map_err(|_| bad(&path, format!("bad number {v:?} in column {name}")))
    };
    let req = |rec: &csv::StringRecord, name: &str| -> Result<f64> {
        num(rec, name)?.ok_or_else(|| bad(&path, format!("empty required column {name}")))
    };
    let mut iterations = Vec::new();
    let mut samples = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let g = req(&rec, "G")? as usize;
        if g > g_max {
            return Err(bad(&path, "G exceeds the padded width"));
        }
        let mut log_tau = Vec::with_capacity(g);
        for gi in 1..=g {
            log_tau.push(req(&rec, &format!("log_tau_{gi}"))?);
        }
        let c = (1..=m).map(|i| req(&rec, &format!("C_{i}")).map(|x| x as usize - 1)).collect::<Result<Vec<_>>>()?;
        let mut comps = Vec::with_capacity(g);
        for gi in 1..=g {
            let k = req(&rec, &format!("K_{gi}"))? as usize;
            if k > k_max {
                return Err(bad(&path, "K exceeds the padded width"));
            }
            let mut comp = Component {
                k,
                k_plus: req(&rec, &format!("K_{gi}_plus"))? as usize,
                w: req(&rec, &format!("w_{gi}"))?,
                log_pi: Vec::with_capacity(k),
                s: Vec::with_capacity(n),
                mu: Vec::with_capacity(k),
                sigma2: Vec::with_capacity(k),
                z: Vec::with_capacity(n),
            };
            for ki in 1..=k {
                comp.log_pi.push(req(&rec, &format!("log_pi_{gi}_{ki}"))?);
                comp.mu.push([req(&rec, &format!("mu_{gi}_{ki}_1"))?, req(&rec, &format!("mu_{gi}_{ki}_2"))?]);
                comp.sigma2
                    .push([req(&rec, &format!("sigma2_{gi}_{ki}_1"))?, req(&rec, &format!("sigma2_{gi}_{ki}_2"))?]);
            }
            for i in 1..=n {
                comp.s.push(req(&rec, &format!("S_{gi}_{i}"))? as usize - 1);
                comp.z.push([req(&rec, &format!("Z_{gi}_{i}_1"))?, req(&rec, &format!("Z_{gi}_{i}_2"))?]);
            }
            comps.push(comp);
        }
        iterations.push(req(&rec, "iter")? as usize);
        samples.push(ModelState {
            g,
            g_plus: req(&rec, "G_plus")? as usize,
            log_tau,
            e: req(&rec, "e")?,
            c,
            alpha: req(&rec, "alpha")?,
            comps,
        });
    }

    let mut log_posterior = Vec::with_capacity(samples.len());
    let mut rdr = csv::Reader::from_path(dir.join("logpost.csv"))?;
    for rec in rdr.records() {
        let rec = rec?;
        log_posterior.push(rec[1].parse::<f64>().map_err(|_| bad(dir, "bad log posterior value"))?);
    }
    if log_posterior.len() != samples.len() {
        return Err(validation("logpost.csv and samples.csv disagree on the number of samples"));
    }

    let mut acceptance = AcceptStats::default();
    let mut rdr = csv::Reader::from_path(dir.join("accept.csv"))?;
    for rec in rdr.records() {
        let rec = rec?;
        let counter = AcceptCounter {
            accepted: rec[1].parse().map_err(|_| bad(dir, "bad acceptance count"))?,
            proposed: rec[2].parse().map_err(|_| bad(dir, "bad proposal count"))?,
        };
        match &rec[0] {
            "z" => acceptance.z = counter,
            "alpha" => acceptance.alpha = counter,
            "e" => acceptance.e = counter,
            "w" => acceptance.w = counter,
            other => return Err(bad(dir, format!("unknown block {other}"))),
        }
    }

    Ok(Trace {
        chain: meta.chain,
        iterations,
        samples,
        log_posterior,
        acceptance,
        scales: meta.scales,
        config: meta.config,
    })
}

/// Reads only the trace metadata.
pub fn read_trace_meta(dir: &Path) -> Result<TraceMeta> {
    Ok(serde_json::from_str(&fs::read_to_string(dir.join("config.json"))?)?)
}
