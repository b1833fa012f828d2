//! One Metropolis-within-Gibbs sweep with telescoping updates of the numbers
//! of network-level and node-level components.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{
    logpdf_mvn_diag_unchecked, logpdf_normal, sample_categorical_log, sample_fisher_f, sample_invgamma,
    sample_log_dirichlet, std_normal,
};
use crate::linalg::Point;
use crate::model::{
    component_count_logweights, mh_logratio_concentration, mu_full_conditional, node_alloc_logprobs,
    sigma2_full_conditional, Component, Geometry, Hyperparams, Model, ModelState, Variant,
};

/// Proposal scales: `delta_z` and `delta_alpha` multiply the proposal standard
/// deviations of the latent spaces and intercept, `s_e` and `s_w` are the
/// log-scale step sizes of the concentrations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProposalScales {
    pub delta_z: f64,
    pub delta_alpha: f64,
    pub s_e: f64,
    pub s_w: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptCounter {
    pub proposed: u64,
    pub accepted: u64,
}

impl AcceptCounter {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += u64::from(accepted);
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptStats {
    pub z: AcceptCounter,
    pub alpha: AcceptCounter,
    pub e: AcceptCounter,
    pub w: AcceptCounter,
}

impl AcceptStats {
    pub fn blocks(&self) -> [(&'static str, AcceptCounter); 4] {
        [("z", self.z), ("alpha", self.alpha), ("e", self.e), ("w", self.w)]
    }
}

#[derive(Clone, Debug)]
struct Cached {
    geo: Geometry,
    shared: f64,
}

/// Geometry of the occupied components left by the previous sweep, keyed by
/// the positions and intercept it was computed at. Not serialized; a resumed
/// chain rebuilds it.
#[derive(Clone, Debug, Default)]
pub struct GeometryCache {
    entries: Vec<(Vec<Point>, f64, Cached)>,
}

impl PartialEq for GeometryCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl GeometryCache {
    fn lookup(&mut self, z: &[Point], alpha: f64) -> Option<Cached> {
        let pos = self.entries.iter().position(|(zc, a, _)| *a == alpha && zc.as_slice() == z)?;
        Some(self.entries.swap_remove(pos).2)
    }
}

pub const TARGET_BLOCK: f64 = 0.25;
pub const TARGET_SCALAR: f64 = 0.44;

/// Mutable sweep context: proposal scales, acceptance counters and adaptation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepControl {
    pub scales: ProposalScales,
    pub stats: AcceptStats,
    /// Adapt the scales after every decision (burn-in only).
    pub adapt: bool,
    /// Number of adaptive sweeps so far; drives the step-size decay.
    pub adapt_step: u64,
    #[serde(skip)]
    cache: GeometryCache,
}

impl SweepControl {
    pub fn new(model: &Model, adapt: bool) -> Self {
        let h = &model.hyper;
        Self {
            scales: ProposalScales { delta_z: h.delta_z, delta_alpha: h.delta_alpha, s_e: h.s_e, s_w: h.s_w },
            stats: AcceptStats::default(),
            adapt,
            adapt_step: 0,
            cache: GeometryCache::default(),
        }
    }

    fn gain(&self) -> f64 {
        (1.0 + self.adapt_step as f64).powf(-0.6)
    }
}

fn adapt(scale: &mut f64, accepted: bool, target: f64, gain: f64) {
    let acc = if accepted { 1.0 } else { 0.0 };
    *scale = (scale.ln() + gain * (acc - target)).clamp(1e-4f64.ln(), 10f64.ln()).exp();
}

fn mh_accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if !log_ratio.is_finite() {
        return log_ratio == f64::INFINITY;
    }
    log_ratio >= 0.0 || (1.0 - rng.random::<f64>()).ln() < log_ratio
}

/// Draws a network-level component with no clustering structure from the prior:
/// one node cluster with centre and variances from their priors and latent
/// positions around it. The ablation uses standard normal positions.
pub fn prior_component<R: Rng + ?Sized>(model: &Model, rng: &mut R) -> Component {
    let h = &model.hyper;
    let n = model.data.n_nodes;
    match model.variant {
        Variant::MonoLapcm => Component {
            k: 1,
            k_plus: 1,
            w: 1.0,
            log_pi: vec![0.0],
            s: vec![0; n],
            mu: vec![[0.0, 0.0]],
            sigma2: vec![[1.0, 1.0]],
            z: (0..n).map(|_| [std_normal(rng), std_normal(rng)]).collect(),
        },
        Variant::Lapcom => {
            let mu = prior_mu(model, rng);
            let sigma2 = prior_sigma2(model, rng);
            let z = (0..n)
                .map(|_| {
                    [mu[0] + sigma2[0].sqrt() * std_normal(rng), mu[1] + sigma2[1].sqrt() * std_normal(rng)]
                })
                .collect();
            Component {
                k: 1,
                k_plus: 1,
                w: sample_fisher_f(h.l_k, h.r_k, rng).expect("validated F parameters"),
                log_pi: vec![0.0],
                s: vec![0; n],
                mu: vec![mu],
                sigma2: vec![sigma2],
                z,
            }
        }
    }
}

fn prior_mu<R: Rng + ?Sized>(model: &Model, rng: &mut R) -> Point {
    let h = &model.hyper;
    let sd = h.sigma_mu.sqrt();
    [h.mu0[0] + sd * std_normal(rng), h.mu0[1] + sd * std_normal(rng)]
}

fn prior_sigma2<R: Rng + ?Sized>(model: &Model, rng: &mut R) -> Point {
    let h = &model.hyper;
    let a = sample_invgamma(h.u_sigma2, h.v_sigma2, rng).expect("validated inverse gamma");
    [a, sample_invgamma(h.u_sigma2, h.v_sigma2, rng).expect("validated inverse gamma")]
}

/// Runs one full sweep, updating `state` in place.
pub fn sweep<R: Rng + ?Sized>(state: &mut ModelState, model: &Model, ctl: &mut SweepControl, rng: &mut R) {
    let data = &model.data;
    let h = &model.hyper;
    let n_networks = data.n_networks;
    let free = data.data_free;

    // latent-space geometry of every component with its likelihood part at the current alpha
    let family = data.family;
    let mut previous = std::mem::take(&mut ctl.cache);
    let mut geos: Vec<Option<Cached>> = state
        .comps
        .iter()
        .map(|c| {
            (!free).then(|| {
                previous.lookup(&c.z, state.alpha).unwrap_or_else(|| {
                    let geo = Geometry::new(&c.z, family);
                    let shared = data.shared(&geo, state.alpha);
                    Cached { geo, shared }
                })
            })
        })
        .collect();
    drop(previous);

    // network allocations
    if state.g > 1 {
        let mut lp = vec![0.0; state.g];
        for m in 0..n_networks {
            for g in 0..state.g {
                lp[g] = state.log_tau[g]
                    + geos[g].as_ref().map_or(0.0, |c| data.loglik(m, &c.geo, state.alpha, c.shared));
            }
            state.c[m] = sample_categorical_log(&lp, rng);
        }
    } else {
        state.c.iter_mut().for_each(|c| *c = 0);
    }

    // occupied network clusters first
    let counts = state.network_counts();
    let order = crate::model::occupied_first(&counts);
    state.permute_networks(&order);
    geos = order.iter().map(|&o| geos[o].take()).collect();
    let m_counts: Vec<usize> = state.network_counts();
    state.g_plus = m_counts.iter().filter(|&&c| c > 0).count();
    let g_plus = state.g_plus;
    let mut members = vec![Vec::new(); g_plus];
    for (m, &g) in state.c.iter().enumerate() {
        members[g].push(m);
    }

    // per occupied component: latent space, then the node-level mixture
    for g in 0..g_plus {
        update_latent_space(state, g, &members[g], &mut geos[g], model, ctl, rng);
        if model.variant == Variant::Lapcom {
            update_node_level(&mut state.comps[g], model, ctl, rng);
        }
    }

    // intercept
    {
        let a_cur = state.alpha;
        let a_prop = a_cur + ctl.scales.delta_alpha * h.s_alpha * std_normal(rng);
        let mut lr = logpdf_normal(a_prop, h.m_alpha, h.s_alpha) - logpdf_normal(a_cur, h.m_alpha, h.s_alpha);
        let mut shared_prop = vec![0.0; g_plus];
        if !free {
            for g in 0..g_plus {
                let c = geos[g].as_ref().expect("geometry present with data");
                let sum_y: f64 = members[g].iter().map(|&m| data.nets[m].sum_y).sum();
                shared_prop[g] = data.shared(&c.geo, a_prop);
                lr += (a_prop - a_cur) * sum_y - members[g].len() as f64 * (shared_prop[g] - c.shared);
            }
        }
        let acc = mh_accept(lr, rng);
        if acc {
            state.alpha = a_prop;
            for (c, s) in geos.iter_mut().zip(&shared_prop) {
                if let Some(c) = c.as_mut() {
                    c.shared = *s;
                }
            }
        }
        ctl.stats.alpha.record(acc);
        if ctl.adapt {
            let gain = ctl.gain();
            adapt(&mut ctl.scales.delta_alpha, acc, TARGET_SCALAR, gain);
        }
    }

    // number of network-level components
    let occupied = &m_counts[..g_plus];
    let lw = component_count_logweights(g_plus, occupied, state.e, h.g_max, &h.bnb_g)
        .expect("occupied clusters never exceed G_max");
    let new_g = g_plus + sample_categorical_log(&lw, rng);

    // network-level concentration
    {
        let e_prop = state.e * (ctl.scales.s_e * std_normal(rng)).exp();
        let lr = mh_logratio_concentration(state.e, e_prop, occupied, new_g, n_networks, h.l_g, h.r_g)
            .unwrap_or(f64::NEG_INFINITY);
        let acc = mh_accept(lr, rng);
        if acc {
            state.e = e_prop;
        }
        ctl.stats.e.record(acc);
        if ctl.adapt {
            let gain = ctl.gain();
            adapt(&mut ctl.scales.s_e, acc, TARGET_SCALAR, gain);
        }
    }

    // occupied geometry carries over to the next sweep
    ctl.cache.entries = geos
        .into_iter()
        .take(g_plus)
        .zip(&state.comps)
        .filter_map(|(c, comp)| c.map(|c| (comp.z.clone(), state.alpha, c)))
        .collect();

    // empty network-level components from the prior
    state.comps.truncate(g_plus);
    while state.comps.len() < new_g {
        state.comps.push(prior_component(model, rng));
    }
    state.g = new_g;

    let conc: Vec<f64> =
        (0..new_g).map(|g| state.e / new_g as f64 + m_counts.get(g).copied().unwrap_or(0) as f64).collect();
    state.log_tau = sample_log_dirichlet(&conc, rng).expect("positive concentrations");

    if ctl.adapt {
        ctl.adapt_step += 1;
    }

    #[cfg(debug_assertions)]
    if let Err(e) = state.check_invariants(h, model.variant) {
        panic!("sweep broke a state invariant: {e}");
    }
}

fn update_latent_space<R: Rng + ?Sized>(
    state: &mut ModelState,
    g: usize,
    members: &[usize],
    cached: &mut Option<Cached>,
    model: &Model,
    ctl: &mut SweepControl,
    rng: &mut R,
) {
    let data = &model.data;
    let alpha = state.alpha;
    let comp = &state.comps[g];
    let dz = ctl.scales.delta_z;
    let z_prop: Vec<Point> = comp
        .z
        .iter()
        .zip(&comp.s)
        .map(|(z, &s)| {
            let sd = match model.variant {
                Variant::MonoLapcm => [dz, dz],
                Variant::Lapcom => [dz * comp.sigma2[s][0].sqrt(), dz * comp.sigma2[s][1].sqrt()],
            };
            [z[0] + sd[0] * std_normal(rng), z[1] + sd[1] * std_normal(rng)]
        })
        .collect();

    let mut lr = 0.0;
    for ((zp, zc), &s) in z_prop.iter().zip(&comp.z).zip(&comp.s) {
        lr += logpdf_mvn_diag_unchecked(*zp, comp.mu[s], comp.sigma2[s])
            - logpdf_mvn_diag_unchecked(*zc, comp.mu[s], comp.sigma2[s]);
    }
    let mut prop_cache = None;
    if let Some(cur) = cached.as_ref() {
        let geo = Geometry::new(&z_prop, data.family);
        let shared = data.shared(&geo, alpha);
        lr -= members.len() as f64 * (shared - cur.shared);
        for &m in members {
            lr += data.cross(m, &cur.geo) - data.cross(m, &geo);
        }
        prop_cache = Some(Cached { geo, shared });
    }
    let acc = mh_accept(lr, rng);
    if acc {
        state.comps[g].z = z_prop;
        if prop_cache.is_some() {
            *cached = prop_cache;
        }
    }
    ctl.stats.z.record(acc);
    if ctl.adapt {
        let gain = ctl.gain();
        adapt(&mut ctl.scales.delta_z, acc, TARGET_BLOCK, gain);
    }
}

/// Gibbs draw of an occupied node-cluster centre.
pub fn draw_mu<R: Rng + ?Sized>(z: &[Point], s: &[usize], k: usize, sigma2_k: Point, h: &Hyperparams, rng: &mut R) -> Point {
    let post = mu_full_conditional(z, s, k, sigma2_k, h).expect("occupied cluster");
    [
        post.mean[0] + post.var[0].sqrt() * std_normal(rng),
        post.mean[1] + post.var[1].sqrt() * std_normal(rng),
    ]
}

/// Gibbs draw of an occupied node-cluster variance.
pub fn draw_sigma2<R: Rng + ?Sized>(z: &[Point], s: &[usize], mu_k: Point, k: usize, h: &Hyperparams, rng: &mut R) -> Point {
    let sp = sigma2_full_conditional(z, s, mu_k, k, h);
    [
        sample_invgamma(sp.u_star, sp.v_star[0], rng).expect("positive shape and scale"),
        sample_invgamma(sp.u_star, sp.v_star[1], rng).expect("positive shape and scale"),
    ]
}

fn update_node_level<R: Rng + ?Sized>(comp: &mut Component, model: &Model, ctl: &mut SweepControl, rng: &mut R) {
    let h = &model.hyper;
    let n = comp.z.len();

    for i in 0..n {
        let lp = node_alloc_logprobs(comp.z[i], &comp.log_pi, &comp.mu, &comp.sigma2);
        comp.s[i] = sample_categorical_log(&lp, rng);
    }
    comp.relabel_nodes();
    let k_plus = comp.k_plus;

    for k in 0..k_plus {
        comp.mu[k] = draw_mu(&comp.z, &comp.s, k, comp.sigma2[k], h, rng);
        comp.sigma2[k] = draw_sigma2(&comp.z, &comp.s, comp.mu[k], k, h, rng);
    }

    let counts = comp.node_counts();
    let occupied = &counts[..k_plus];
    let lw = component_count_logweights(k_plus, occupied, comp.w, h.k_max, &h.bnb_k)
        .expect("occupied clusters never exceed K_max");
    let new_k = k_plus + sample_categorical_log(&lw, rng);

    let w_prop = comp.w * (ctl.scales.s_w * std_normal(rng)).exp();
    let lr = mh_logratio_concentration(comp.w, w_prop, occupied, new_k, n, h.l_k, h.r_k).unwrap_or(f64::NEG_INFINITY);
    let acc = mh_accept(lr, rng);
    if acc {
        comp.w = w_prop;
    }
    ctl.stats.w.record(acc);
    if ctl.adapt {
        let gain = ctl.gain();
        adapt(&mut ctl.scales.s_w, acc, TARGET_SCALAR, gain);
    }

    comp.k = new_k;
    comp.mu.truncate(k_plus);
    comp.sigma2.truncate(k_plus);
    while comp.mu.len() < new_k {
        comp.mu.push(prior_mu(model, rng));
        comp.sigma2.push(prior_sigma2(model, rng));
    }
    let conc: Vec<f64> =
        (0..new_k).map(|k| comp.w / new_k as f64 + counts.get(k).copied().unwrap_or(0) as f64).collect();
    comp.log_pi = sample_log_dirichlet(&conc, rng).expect("positive concentrations");
}
