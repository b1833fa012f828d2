//! Chain driver: burn-in, thinning, trace capture, checkpoints, multiple chains.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SamplerConfig;
use super::init::{init_chain, perturb_state};
use super::sweep::{sweep, AcceptStats, ProposalScales, SweepControl};
use crate::data::Multiplex;
use crate::error::{Error, Result};
use crate::model::{log_posterior, Model, ModelData, ModelState};

const STREAM_INIT: u64 = 0;
const STREAM_MCMC: u64 = 1;
const STREAM_PERTURB: u64 = 2;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Thinned post-burn-in output of one chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub chain: usize,
    pub iterations: Vec<usize>,
    pub samples: Vec<ModelState>,
    pub log_posterior: Vec<f64>,
    /// Post-burn-in acceptance counts.
    pub acceptance: AcceptStats,
    /// Scales in use after burn-in adaptation.
    pub scales: ProposalScales,
    pub config: SamplerConfig,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn acceptance_rates(&self) -> Vec<(&'static str, f64)> {
        self.acceptance.blocks().iter().map(|(n, c)| (*n, c.rate())).collect()
    }
}

/// Serializable generator position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: Vec<u8>,
    pub stream: u64,
    pub word_pos: String,
}

impl RngState {
    fn capture(rng: &ChaCha8Rng) -> Self {
        Self { seed: rng.get_seed().to_vec(), stream: rng.get_stream(), word_pos: rng.get_word_pos().to_string() }
    }

    fn restore(&self) -> Result<ChaCha8Rng> {
        let seed: [u8; 32] =
            self.seed.as_slice().try_into().map_err(|_| Error::Validation("checkpoint seed must be 32 bytes".into()))?;
        let pos: u128 =
            self.word_pos.parse().map_err(|_| Error::Validation("checkpoint word position is not an integer".into()))?;
        let mut r = ChaCha8Rng::from_seed(seed);
        r.set_stream(self.stream);
        r.set_word_pos(pos);
        Ok(r)
    }
}

/// Everything needed to continue a chain bit-exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub sweeps_done: usize,
    pub state: ModelState,
    pub control: SweepControl,
    pub rng: RngState,
    pub trace: Trace,
}

/// Steps one chain and collects its trace.
pub struct ChainRunner<'m> {
    model: &'m Model,
    cfg: SamplerConfig,
    state: ModelState,
    ctl: SweepControl,
    rng: ChaCha8Rng,
    sweeps_done: usize,
    trace: Trace,
}

impl<'m> ChainRunner<'m> {
    /// Chain `chain` draws its moves from the stream seeded by `cfg.seed + chain`.
    pub fn new(model: &'m Model, cfg: SamplerConfig, init: ModelState, chain: usize) -> Self {
        let rng = rng_for(cfg.seed.wrapping_add(chain as u64), STREAM_MCMC);
        let ctl = SweepControl::new(model, cfg.auto_tune && cfg.burn_in > 0);
        let trace = Trace {
            chain,
            iterations: Vec::with_capacity(cfg.n_samples()),
            samples: Vec::with_capacity(cfg.n_samples()),
            log_posterior: Vec::with_capacity(cfg.n_samples()),
            acceptance: AcceptStats::default(),
            scales: ctl.scales,
            config: cfg.clone(),
        };
        Self { model, cfg, state: init, ctl, rng, sweeps_done: 0, trace }
    }

    pub fn resume(model: &'m Model, cp: Checkpoint) -> Result<Self> {
        let rng = cp.rng.restore()?;
        Ok(Self {
            model,
            cfg: cp.trace.config.clone(),
            state: cp.state,
            ctl: cp.control,
            rng,
            sweeps_done: cp.sweeps_done,
            trace: cp.trace,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            sweeps_done: self.sweeps_done,
            state: self.state.clone(),
            control: self.ctl.clone(),
            rng: RngState::capture(&self.rng),
            trace: self.trace.clone(),
        }
    }

    pub fn sweeps_done(&self) -> usize {
        self.sweeps_done
    }

    pub fn is_done(&self) -> bool {
        self.sweeps_done >= self.cfg.total_sweeps()
    }

    pub fn state(&self) -> &ModelState {
        &self.state
    }

    pub fn control(&self) -> &SweepControl {
        &self.ctl
    }

    pub fn step(&mut self) {
        sweep(&mut self.state, self.model, &mut self.ctl, &mut self.rng);
        self.sweeps_done += 1;
        let t = self.sweeps_done;
        if t == self.cfg.burn_in {
            self.ctl.adapt = false;
            self.ctl.stats = AcceptStats::default();
        }
        if t > self.cfg.burn_in && (t - self.cfg.burn_in) % self.cfg.thin == 0 {
            self.trace.iterations.push(t);
            self.trace.log_posterior.push(log_posterior(&self.state, self.model));
            self.trace.samples.push(self.state.clone());
        }
    }

    /// Runs until `target` sweeps are done (capped at the configured total).
    pub fn run_to(&mut self, target: usize) {
        let target = target.min(self.cfg.total_sweeps());
        while self.sweeps_done < target {
            self.step();
        }
    }

    pub fn finish(mut self) -> Trace {
        self.run_to(self.cfg.total_sweeps());
        self.trace.acceptance = self.ctl.stats;
        self.trace.scales = self.ctl.scales;
        self.trace
    }
}

/// Deterministic starting state shared by all chains of a run.
pub fn initial_state(y: &Multiplex, model: &Model, cfg: &SamplerConfig) -> Result<ModelState> {
    let mut rng = rng_for(cfg.seed, STREAM_INIT);
    init_chain(y, model, cfg, &mut rng)
}

/// Starting state of chain `chain`: the shared start, perturbed for `chain > 0`.
pub fn chain_start(base: &ModelState, cfg: &SamplerConfig, chain: usize, perturb: bool) -> ModelState {
    let mut s = base.clone();
    if perturb && chain > 0 && cfg.perturb_scale > 0.0 {
        let mut rng = rng_for(cfg.seed.wrapping_add(chain as u64), STREAM_PERTURB);
        perturb_state(&mut s, cfg.perturb_scale, &mut rng);
    }
    s
}

pub fn build_model(y: &Multiplex, cfg: &SamplerConfig) -> Model {
    Model::new(ModelData::from_multiplex(y), cfg.hyper.clone(), cfg.variant)
}

pub fn run_chain(y: &Multiplex, cfg: &SamplerConfig) -> Result<Trace> {
    let model = build_model(y, cfg);
    let init = initial_state(y, &model, cfg)?;
    Ok(ChainRunner::new(&model, cfg.clone(), init, 0).finish())
}

/// Runs `n_chains` chains in parallel. Chain 0 starts from the data-driven
/// initialization; with `perturb`, later chains start from noisy copies of it.
pub fn run_multichain(y: &Multiplex, cfg: &SamplerConfig, n_chains: usize, perturb: bool) -> Result<Vec<Trace>> {
    if n_chains == 0 {
        return Err(Error::Validation("need at least one chain".into()));
    }
    let model = build_model(y, cfg);
    let base = initial_state(y, &model, cfg)?;
    Ok((0..n_chains)
        .into_par_iter()
        .map(|i| ChainRunner::new(&model, cfg.clone(), chain_start(&base, cfg, i, perturb), i).finish())
        .collect())
}
