//! Synthetic multiplexes with planted network-level and node-level clusters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::data::{Multiplex, Network};
use crate::distributions::{sample_categorical_log, std_normal, EdgeFamily};
use crate::error::{validation, Result};
use crate::linalg::{sq_dist, Point};

/// Generative settings of a simulated multiplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub m: usize,
    pub n: usize,
    pub g_star: usize,
    pub tau: Vec<f64>,
    pub k: Vec<usize>,
    pub pi: Vec<Vec<f64>>,
    pub mu: Vec<Vec<Point>>,
    pub sigma2: f64,
    pub alpha: f64,
    pub family: EdgeFamily,
    #[serde(default)]
    pub directed: bool,
    pub seed: u64,
}

/// Planted structure of a simulated multiplex (0-based labels).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub c: Vec<usize>,
    pub s: Vec<Vec<usize>>,
    pub z: Vec<Vec<Point>>,
}

/// Node-cluster centres used by the presets for `k` clusters.
pub fn preset_means(k: usize) -> Vec<Point> {
    match k {
        1 => vec![[0.0, 0.0]],
        2 => vec![[-0.8, 0.8], [0.8, -0.8]],
        3 => vec![[-0.9, -0.9], [1.4, 0.4], [-0.9, 1.4]],
        _ => panic!("presets define centres for 1 to 3 clusters only"),
    }
}

fn preset_weights(k: usize, with_half: bool) -> Vec<f64> {
    match k {
        1 => vec![1.0],
        2 if with_half => vec![0.5, 0.5],
        2 => vec![0.7, 0.3],
        3 => vec![0.4, 0.3, 0.3],
        _ => unreachable!(),
    }
}

pub const PRESET_NAMES: [&str; 13] = ["A", "B", "C", "D", "E", "F", "G", "H", "I", "II", "III", "IV", "V"];

/// Built-in scenarios: A-H are count multiplexes, I-V are binary.
pub fn preset(name: &str, seed: u64) -> Result<ScenarioSpec> {
    // (M, N, K per cluster, tau, whether a 2-cluster space uses equal weights)
    let (m, n, ks, tau, half, family): (usize, usize, Vec<usize>, Vec<f64>, bool, EdgeFamily) = match name {
        "A" => (20, 30, vec![1, 1], vec![0.6, 0.4], true, EdgeFamily::Count),
        "B" => (20, 50, vec![1, 1], vec![0.6, 0.4], true, EdgeFamily::Count),
        "C" => (20, 30, vec![1, 2], vec![0.6, 0.4], true, EdgeFamily::Count),
        "D" => (20, 50, vec![1, 2], vec![0.6, 0.4], true, EdgeFamily::Count),
        "E" => (20, 30, vec![2, 3], vec![0.6, 0.4], false, EdgeFamily::Count),
        "F" => (20, 60, vec![2, 3], vec![0.6, 0.4], false, EdgeFamily::Count),
        "G" => (50, 30, vec![2, 3], vec![0.6, 0.4], false, EdgeFamily::Count),
        "H" => (50, 60, vec![2, 3], vec![0.6, 0.4], false, EdgeFamily::Count),
        "I" => (20, 50, vec![1, 1], vec![0.6, 0.4], true, EdgeFamily::Binary),
        "II" => (50, 30, vec![2, 3], vec![0.6, 0.4], false, EdgeFamily::Binary),
        "III" => (50, 30, vec![1, 2, 3], vec![0.4, 0.3, 0.3], false, EdgeFamily::Binary),
        "IV" => (50, 60, vec![1, 2, 2, 3], vec![0.3, 0.3, 0.2, 0.2], false, EdgeFamily::Binary),
        "V" => (100, 60, vec![1, 2, 2, 3], vec![0.3, 0.3, 0.2, 0.2], false, EdgeFamily::Binary),
        other => return Err(validation(format!("unknown preset {other:?}"))),
    };
    // the four-cluster presets pair one equal-weight and one unequal two-cluster space
    let pi: Vec<Vec<f64>> = if ks.len() == 4 {
        vec![vec![1.0], vec![0.5, 0.5], vec![0.7, 0.3], vec![0.4, 0.3, 0.3]]
    } else {
        ks.iter().map(|&k| preset_weights(k, half)).collect()
    };
    Ok(ScenarioSpec {
        name: name.to_string(),
        m,
        n,
        g_star: ks.len(),
        tau,
        mu: ks.iter().map(|&k| preset_means(k)).collect(),
        k: ks,
        pi,
        sigma2: 0.25,
        alpha: if n == 30 { 0.6 } else { -0.4 },
        family,
        directed: false,
        seed,
    })
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let g = self.g_star;
        if self.m == 0 || self.n < 2 || g == 0 {
            return Err(validation("scenario needs M >= 1, N >= 2 and at least one cluster"));
        }
        if self.tau.len() != g || self.k.len() != g || self.pi.len() != g || self.mu.len() != g {
            return Err(validation("tau, K, pi and mu must each have G* entries"));
        }
        let simplex = |v: &[f64]| v.iter().all(|&x| x >= 0.0) && (v.iter().sum::<f64>() - 1.0).abs() < 1e-9;
        if !simplex(&self.tau) {
            return Err(validation("tau is not a simplex"));
        }
        for gi in 0..g {
            if self.pi[gi].len() != self.k[gi] || self.mu[gi].len() != self.k[gi] || !simplex(&self.pi[gi]) {
                return Err(validation(format!("cluster {}: pi and mu must be K-vectors with pi a simplex", gi + 1)));
            }
        }
        if !(self.sigma2 >= 0.0) || !self.alpha.is_finite() {
            return Err(validation("sigma2 must be non-negative and alpha finite"));
        }
        Ok(())
    }
}

fn ln_weights(p: &[f64]) -> Vec<f64> {
    p.iter().map(|x| x.ln()).collect()
}

/// Samples a multiplex and its planted structure; reproducible from `spec.seed`.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<(Multiplex, Truth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let lt = ln_weights(&spec.tau);
    let c: Vec<usize> = (0..spec.m).map(|_| sample_categorical_log(&lt, &mut rng)).collect();
    let sd = spec.sigma2.sqrt();
    let mut s = Vec::with_capacity(spec.g_star);
    let mut z = Vec::with_capacity(spec.g_star);
    for g in 0..spec.g_star {
        let lp = ln_weights(&spec.pi[g]);
        let sg: Vec<usize> = (0..spec.n).map(|_| sample_categorical_log(&lp, &mut rng)).collect();
        let zg: Vec<Point> = sg
            .iter()
            .map(|&k| {
                let mu = spec.mu[g][k];
                [mu[0] + sd * std_normal(&mut rng), mu[1] + sd * std_normal(&mut rng)]
            })
            .collect();
        s.push(sg);
        z.push(zg);
    }
    let n = spec.n;
    let mut nets = Vec::with_capacity(spec.m);
    for &g in &c {
        let zg = &z[g];
        let mut w = vec![0u32; n * n];
        for i in 0..n {
            let js: Box<dyn Iterator<Item = usize>> =
                if spec.directed { Box::new((0..n).filter(move |&j| j != i)) } else { Box::new((i + 1)..n) };
            for j in js {
                let eta = spec.alpha - sq_dist(zg[i], zg[j]);
                let y = draw_edge(eta, spec.family, &mut rng);
                w[i * n + j] = y;
                if !spec.directed {
                    w[j * n + i] = y;
                }
            }
        }
        nets.push(Network::new(n, w, spec.directed, spec.family)?);
    }
    Ok((Multiplex::from_networks(nets)?, Truth { c, s, z }))
}

/// One edge value with linear predictor `eta`.
pub fn draw_edge<R: Rng + ?Sized>(eta: f64, family: EdgeFamily, rng: &mut R) -> u32 {
    match family {
        EdgeFamily::Binary => {
            let p = 1.0 / (1.0 + (-eta).exp());
            u32::from(rng.random::<f64>() < p)
        }
        EdgeFamily::Count => {
            let lambda = eta.exp();
            if lambda <= 0.0 {
                return 0;
            }
            let d = Poisson::new(lambda).expect("positive rate");
            let v: f64 = d.sample(rng);
            v.min(u32::MAX as f64) as u32
        }
    }
}
