use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use lapcom::data::{load_multiplex, save_multiplex, InputFormat, Multiplex};
use lapcom::evaluation::metrics::{ari, match_labels, procrustes_correlation};
use lapcom::evaluation::ppc::{ppc_report, ppc_simulate, write_ppc_report};
use lapcom::evaluation::scenario::{generate_scenario, preset, ScenarioSpec, Truth, PRESET_NAMES};
use lapcom::linalg::Point;
use lapcom::postprocess::{read_solution, reconcile_chains, write_solution_bundle};
use lapcom::sampler::trace_io::{read_trace, write_trace};
use lapcom::sampler::{build_model, chain_start, initial_state, ChainRunner, Checkpoint, SamplerConfig, Trace};

use crate::error::{CliError, CliResult};
use crate::manifest::{config_digest, load_verified, multiplex_digest, upstream, RunManifest, RUN_MANIFEST};
use crate::{EvaluateArgs, FitArgs, PostprocessArgs, PpcArgs, SimulateArgs};

const TRUTH_FILE: &str = "truth.json";
const CHECKPOINT_FILE: &str = "checkpoint.json";
const SOLUTION_FILE: &str = "solution.json";

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn require(path: &Path, hint: &str) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Missing { path: path.to_path_buf(), hint: hint.to_string() })
    }
}

/// Planted structure as written by `simulate`, with 1-based labels.
#[derive(Debug, Serialize, Deserialize)]
struct TruthFile {
    spec: ScenarioSpec,
    c: Vec<usize>,
    s: Vec<Vec<usize>>,
    z: Vec<Vec<Point>>,
}

impl TruthFile {
    fn from_truth(spec: ScenarioSpec, t: Truth) -> Self {
        let up = |v: &[usize]| v.iter().map(|x| x + 1).collect::<Vec<_>>();
        Self { spec, c: up(&t.c), s: t.s.iter().map(|s| up(s)).collect(), z: t.z }
    }

    fn into_truth(self) -> CliResult<Truth> {
        let down = |v: &[usize]| -> CliResult<Vec<usize>> {
            v.iter().map(|&x| x.checked_sub(1).ok_or_else(|| usage("truth labels must be 1-based"))).collect()
        };
        Ok(Truth { c: down(&self.c)?, s: self.s.iter().map(|s| down(s)).collect::<CliResult<_>>()?, z: self.z })
    }
}

pub fn simulate(a: SimulateArgs) -> CliResult<()> {
    let start = Instant::now();
    let spec = match (&a.preset, &a.spec) {
        (Some(name), _) => {
            if !PRESET_NAMES.contains(&name.as_str()) {
                return Err(usage(format!("unknown preset {name:?}; choose one of {}", PRESET_NAMES.join(", "))));
            }
            preset(name, a.seed)?
        }
        (None, Some(path)) => {
            require(path, "scenario spec file")?;
            let mut spec: ScenarioSpec = serde_json::from_str(&fs::read_to_string(path)?)
                .map_err(|e| usage(format!("invalid spec {}: {e}", path.display())))?;
            spec.seed = a.seed;
            spec
        }
        (None, None) => return Err(usage("give --preset or --spec")),
    };
    let (mx, truth) = generate_scenario(&spec)?;
    fs::create_dir_all(&a.out)?;
    save_multiplex(&a.out, &mx, a.format.into())?;
    fs::write(a.out.join(TRUTH_FILE), serde_json::to_string_pretty(&TruthFile::from_truth(spec, truth))?)?;
    let mut m = RunManifest::new("simulate");
    m.seed = Some(a.seed);
    m.data_digest = Some(multiplex_digest(&mx));
    m.data_format = Some(a.format.into());
    m.data_directed = Some(mx.is_directed());
    m.collect_artifacts(&a.out)?;
    m.elapsed_secs = start.elapsed().as_secs_f64();
    m.write(&a.out)?;
    log::info!("wrote {} networks on {} nodes to {}", mx.n_layers(), mx.n_nodes(), a.out.display());
    Ok(())
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn resolve_config(a: &FitArgs, mx: &Multiplex) -> CliResult<SamplerConfig> {
    let (m, n) = (mx.n_layers(), mx.n_nodes());
    let mut cfg = SamplerConfig::for_size(m, n);
    if let Some(path) = &a.config {
        require(path, "sampler config file")?;
        let over: Value = serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?;
        let mut base = serde_json::to_value(&cfg)?;
        merge(&mut base, over);
        cfg = serde_json::from_value(base).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(v) = a.variant {
        cfg.variant = v;
    }
    if let Some(i) = a.iters {
        cfg.n_iter = i;
    }
    if let Some(b) = a.burnin {
        cfg.burn_in = b;
    }
    if let Some(t) = a.thin {
        cfg.thin = t;
    }
    if let Some(i) = a.init {
        cfg.init_method = i;
    }
    if let Some(nm) = a.n_min {
        cfg.hyper.set_n_min(n, nm);
    }
    cfg.validate(n)?;
    Ok(cfg)
}

fn write_checkpoint(dir: &Path, cp: &Checkpoint) -> CliResult<()> {
    let tmp = dir.join(format!("{CHECKPOINT_FILE}.tmp"));
    fs::write(&tmp, serde_json::to_vec(cp)?)?;
    fs::rename(tmp, dir.join(CHECKPOINT_FILE))?;
    Ok(())
}

fn chain_dir(out: &Path, chain: usize) -> PathBuf {
    out.join(format!("chain_{chain}"))
}

pub fn fit(a: FitArgs) -> CliResult<()> {
    let start = Instant::now();
    if a.n_chains == 0 {
        return Err(usage("--n-chains must be at least 1"));
    }
    if a.checkpoint_every == 0 {
        return Err(usage("--checkpoint-every must be positive"));
    }
    require(&a.data, "multiplex data")?;
    let format: InputFormat = a.format.into();
    let mx = load_multiplex(&a.data, format, a.directed)?;
    let cfg = resolve_config(&a, &mx)?;
    let (n, m) = (mx.n_nodes(), mx.n_layers());
    log::info!(
        "fitting {m} networks on {n} nodes: {} chains, {} + {} sweeps, thin {}, G_max {}, K_max {}",
        a.n_chains,
        cfg.burn_in,
        cfg.n_iter,
        cfg.thin,
        cfg.hyper.g_max,
        cfg.hyper.k_max
    );
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("config.json"), serde_json::to_string_pretty(&cfg)?)?;

    let model = build_model(&mx, &cfg);
    let base = initial_state(&mx, &model, &cfg)?;
    let every = a.checkpoint_every;
    let traces: Vec<Trace> = (0..a.n_chains)
        .into_par_iter()
        .map(|i| -> CliResult<Trace> {
            let dir = chain_dir(&a.out, i);
            fs::create_dir_all(&dir)?;
            let cp_path = dir.join(CHECKPOINT_FILE);
            if a.resume && !cp_path.exists() && dir.join("logpost.csv").exists() {
                log::info!("chain {i}: keeping finished trace");
                return Ok(read_trace(&dir)?);
            }
            let mut runner = if a.resume && cp_path.exists() {
                let cp: Checkpoint = serde_json::from_slice(&fs::read(&cp_path)?)?;
                if cp.trace.config != cfg {
                    return Err(usage(format!("chain {i}: checkpoint was written with a different configuration")));
                }
                log::info!("chain {i}: resuming after {} sweeps", cp.sweeps_done);
                ChainRunner::resume(&model, cp)?
            } else {
                ChainRunner::new(&model, cfg.clone(), chain_start(&base, &cfg, i, true), i)
            };
            while !runner.is_done() {
                let next = (runner.sweeps_done() / every + 1) * every;
                runner.run_to(next);
                let rates: Vec<String> = runner
                    .control()
                    .stats
                    .blocks()
                    .iter()
                    .map(|(name, c)| format!("{name} {:.2}", c.rate()))
                    .collect();
                log::info!(
                    "chain {i}: {}/{} sweeps, G+ {}, acceptance {}",
                    runner.sweeps_done(),
                    cfg.total_sweeps(),
                    runner.state().g_plus,
                    rates.join(", ")
                );
                if !runner.is_done() {
                    write_checkpoint(&dir, &runner.checkpoint())?;
                }
            }
            let trace = runner.finish();
            write_trace(&dir, &trace, n, m)?;
            if cp_path.exists() {
                fs::remove_file(&cp_path)?;
            }
            Ok(trace)
        })
        .collect::<CliResult<_>>()?;
    for t in &traces {
        let rates: Vec<String> = t.acceptance_rates().iter().map(|(b, r)| format!("{b} {r:.3}")).collect();
        log::info!("chain {} finished, post-burn-in acceptance: {}", t.chain, rates.join(", "));
    }

    let mut man = RunManifest::new("fit");
    man.seed = Some(cfg.seed);
    man.config_digest = Some(config_digest(&cfg)?);
    man.data_digest = Some(multiplex_digest(&mx));
    man.data_dir = Some(fs::canonicalize(&a.data)?);
    man.data_format = Some(format);
    man.data_directed = Some(a.directed);
    let data_dir = if a.data.is_dir() { a.data.clone() } else { a.data.parent().map(Path::to_path_buf).unwrap_or_default() };
    man.upstream.extend(upstream("data", &data_dir)?);
    man.collect_artifacts(&a.out)?;
    man.elapsed_secs = start.elapsed().as_secs_f64();
    man.write(&a.out)?;
    Ok(())
}

/// Chain directories of a fit output, or the directory itself when it holds a trace.
fn chain_dirs(dir: &Path) -> CliResult<Vec<PathBuf>> {
    require(dir, "trace directory")?;
    if dir.join("logpost.csv").exists() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut found: Vec<(usize, PathBuf)> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter_map(|p| {
            let idx = p.file_name()?.to_str()?.strip_prefix("chain_")?.parse().ok()?;
            (p.is_dir() && p.join("logpost.csv").exists()).then_some((idx, p))
        })
        .collect();
    found.sort();
    if found.is_empty() {
        return Err(usage(format!("{} holds no finished chain", dir.display())));
    }
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

/// Fit manifest for a fit directory or the parent of a chain directory.
fn fit_manifest(dir: &Path) -> CliResult<Option<(PathBuf, RunManifest)>> {
    for cand in [Some(dir), dir.parent()].into_iter().flatten() {
        if cand.join(RUN_MANIFEST).exists() {
            let m = load_verified(cand)?;
            if m.command == "fit" {
                return Ok(Some((cand.to_path_buf(), m)));
            }
        }
    }
    Ok(None)
}

/// Loads the data given explicitly or recorded by the fit, checking its digest.
fn data_for(explicit: Option<&Path>, fit: Option<&RunManifest>) -> CliResult<Multiplex> {
    let format = fit.and_then(|m| m.data_format).unwrap_or(InputFormat::EdgeList);
    let directed = fit.and_then(|m| m.data_directed).unwrap_or(false);
    let path = match (explicit, fit.and_then(|m| m.data_dir.clone())) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => p,
        (None, None) => return Err(usage("no --data given and the traces carry no fit manifest")),
    };
    require(&path, "multiplex data")?;
    let mx = load_multiplex(&path, format, directed)?;
    if let Some(expected) = fit.and_then(|m| m.data_digest.as_ref()) {
        if *expected != multiplex_digest(&mx) {
            return Err(CliError::Digest(format!("{} is not the data the chains were fitted to", path.display())));
        }
    }
    Ok(mx)
}

pub fn postprocess(a: PostprocessArgs) -> CliResult<()> {
    let start = Instant::now();
    let mut man = RunManifest::new("postprocess");
    let mut dirs = Vec::new();
    let mut fit_man = None;
    for t in &a.traces {
        if let Some((fdir, m)) = fit_manifest(t)? {
            man.upstream.extend(upstream("fit", &fdir)?);
            fit_man.get_or_insert(m);
        }
        dirs.extend(chain_dirs(t)?);
    }
    let mx = data_for(a.data.as_deref(), fit_man.as_ref())?;
    let traces: Vec<Trace> = dirs.iter().map(|d| read_trace(d)).collect::<Result<_, _>>()?;
    let mut seen = std::collections::BTreeSet::new();
    if traces.iter().any(|t| !seen.insert(t.chain)) {
        return Err(usage("two trace directories hold the same chain index"));
    }
    let cfg = &traces[0].config;
    if traces.iter().any(|t| t.config.hyper != cfg.hyper || t.config.variant != cfg.variant) {
        return Err(usage("traces were produced with different model settings"));
    }
    let model = build_model(&mx, cfg);
    let rec = reconcile_chains(&traces, &model)?;
    for d in &rec.discarded {
        log::warn!("chain {} discarded: {}", d.chain, d.reason);
    }
    log::info!(
        "selected chain {} with {} network clusters; cross-chain ARI {:?}",
        rec.selected_chain,
        rec.solution.g_hat_plus,
        rec.cross_chain_ari
    );
    write_solution_bundle(&a.out, &rec)?;
    man.seed = Some(cfg.seed);
    man.config_digest = Some(config_digest(cfg)?);
    man.data_digest = Some(multiplex_digest(&mx));
    man.data_dir = fit_man.as_ref().and_then(|m| m.data_dir.clone());
    man.data_format = fit_man.as_ref().and_then(|m| m.data_format);
    man.data_directed = fit_man.as_ref().and_then(|m| m.data_directed);
    man.collect_artifacts(&a.out)?;
    man.elapsed_secs = start.elapsed().as_secs_f64();
    man.write(&a.out)?;
    Ok(())
}

pub fn ppc(a: PpcArgs) -> CliResult<()> {
    let start = Instant::now();
    let sol_path = a.solution.join(SOLUTION_FILE);
    require(&sol_path, "postprocess output")?;
    let mut man = RunManifest::new("ppc");
    man.upstream.extend(upstream("solution", &a.solution)?);
    let rec = read_solution(&sol_path)?;
    let fit = fit_manifest(&a.traces)?;
    if let Some((fdir, _)) = &fit {
        man.upstream.extend(upstream("fit", fdir)?);
    }
    let dir = chain_dirs(&a.traces)?
        .into_iter()
        .find(|d| read_trace_chain(d) == Some(rec.selected_chain))
        .ok_or_else(|| usage(format!("chain {} not found under {}", rec.selected_chain, a.traces.display())))?;
    let trace = read_trace(&dir)?;
    let mx = data_for(a.data.as_deref(), fit.as_ref().map(|(_, m)| m))?;
    let reps = ppc_simulate(&trace.samples, &mx, a.replicates, a.seed)?;
    let report = ppc_report(&mx, &reps)?;
    if !report.empty_replicates.is_empty() {
        log::warn!("{} replicated networks have no edges", report.empty_replicates.len());
    }
    write_ppc_report(&a.out, &report)?;
    man.seed = Some(a.seed);
    man.data_digest = Some(multiplex_digest(&mx));
    man.collect_artifacts(&a.out)?;
    man.elapsed_secs = start.elapsed().as_secs_f64();
    man.write(&a.out)?;
    Ok(())
}

fn read_trace_chain(dir: &Path) -> Option<usize> {
    lapcom::sampler::trace_io::read_trace_meta(dir).ok().map(|m| m.chain)
}

#[derive(Debug, Serialize, Deserialize)]
struct ClusterEvaluation {
    /// 1-based estimated and planted cluster labels.
    estimated: usize,
    truth: Option<usize>,
    node_ari: Option<f64>,
    procrustes_correlation: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Evaluation {
    network_ari: f64,
    g_hat_plus: usize,
    g_true: usize,
    clusters: Vec<ClusterEvaluation>,
}

pub fn evaluate(a: EvaluateArgs) -> CliResult<()> {
    let start = Instant::now();
    let truth_path = a.truth.join(TRUTH_FILE);
    require(&truth_path, "truth labels are only available for simulated data")?;
    let sol_path = a.solution.join(SOLUTION_FILE);
    require(&sol_path, "postprocess output")?;
    let mut man = RunManifest::new("evaluate");
    man.upstream.extend(upstream("truth", &a.truth)?);
    man.upstream.extend(upstream("solution", &a.solution)?);
    let tf: TruthFile = serde_json::from_str(&fs::read_to_string(&truth_path)?)?;
    let truth = tf.into_truth()?;
    let sol = read_solution(&sol_path)?.solution;
    if sol.c_hat.len() != truth.c.len() {
        return Err(usage("solution and truth cover different numbers of networks"));
    }
    let map = match_labels(&sol.c_hat, &truth.c)?;
    let clusters = sol
        .groups
        .iter()
        .enumerate()
        .map(|(g, gs)| -> CliResult<ClusterEvaluation> {
            let tg = map.get(&g).copied().filter(|&t| t < truth.z.len());
            let (node_ari, pc) = match tg {
                Some(t) if truth.s[t].len() == gs.s_hat.len() => {
                    (Some(ari(&gs.s_hat, &truth.s[t])?), Some(procrustes_correlation(&gs.z_hat, &truth.z[t])))
                }
                _ => (None, None),
            };
            Ok(ClusterEvaluation { estimated: g + 1, truth: tg.map(|t| t + 1), node_ari, procrustes_correlation: pc })
        })
        .collect::<CliResult<_>>()?;
    let ev = Evaluation {
        network_ari: ari(&sol.c_hat, &truth.c)?,
        g_hat_plus: sol.g_hat_plus,
        g_true: truth.z.len(),
        clusters,
    };
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("evaluation.json"), serde_json::to_string_pretty(&ev)?)?;
    log::info!("network ARI {:.3}", ev.network_ari);
    man.collect_artifacts(&a.out)?;
    man.elapsed_secs = start.elapsed().as_secs_f64();
    man.write(&a.out)?;
    Ok(())
}
