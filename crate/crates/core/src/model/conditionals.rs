//! Full conditionals and Metropolis-Hastings log-ratios.

use super::{network_loglik, Hyperparams, ModelState};
use crate::data::Network;
use crate::distributions::{
    ln_gamma, logpdf_fisher_f_unchecked, logpdf_mvn_diag_unchecked, logpdf_normal, logpmf_translated_bnb_unchecked,
    normalize_log, BnbParams, EdgeFamily,
};
use crate::error::{domain, Error, Result};
use crate::linalg::Point;

/// Normalized log allocation probabilities of one network over all `G` components.
pub fn network_alloc_logprobs(y: &Network, state: &ModelState) -> Vec<f64> {
    let mut lp: Vec<f64> = state
        .comps
        .iter()
        .zip(&state.log_tau)
        .map(|(comp, lt)| lt + network_loglik(y, &comp.z, state.alpha, y.family()))
        .collect();
    normalize_log(&mut lp);
    lp
}

/// Normalized log allocation probabilities of one node over the `K_g` node clusters.
pub fn node_alloc_logprobs(z: Point, log_pi: &[f64], mu: &[Point], sigma2: &[Point]) -> Vec<f64> {
    let mut lp: Vec<f64> =
        (0..log_pi.len()).map(|k| log_pi[k] + logpdf_mvn_diag_unchecked(z, mu[k], sigma2[k])).collect();
    normalize_log(&mut lp);
    lp
}

/// Gaussian full conditional of a node-cluster centre (diagonal covariance).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuPosterior {
    pub mean: Point,
    pub var: Point,
}

pub fn mu_full_conditional(
    z: &[Point],
    s: &[usize],
    k: usize,
    sigma2_k: Point,
    hyper: &Hyperparams,
) -> Result<MuPosterior> {
    let mut n_k = 0usize;
    let mut sum = [0.0; 2];
    for (p, &sk) in z.iter().zip(s) {
        if sk == k {
            n_k += 1;
            sum[0] += p[0];
            sum[1] += p[1];
        }
    }
    if n_k == 0 {
        return Err(Error::Contract(format!("node cluster {k} is empty; draw its centre from the prior")));
    }
    let mut out = MuPosterior { mean: [0.0; 2], var: [0.0; 2] };
    for q in 0..2 {
        let prec = n_k as f64 / sigma2_k[q] + 1.0 / hyper.sigma_mu;
        out.var[q] = 1.0 / prec;
        out.mean[q] = out.var[q] * (sum[q] / sigma2_k[q] + hyper.mu0[q] / hyper.sigma_mu);
    }
    Ok(out)
}

/// Inverse-gamma full conditional of a node-cluster variance: shape shared by
/// both coordinates, one scale per coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sigma2Posterior {
    pub u_star: f64,
    pub v_star: Point,
}

pub fn sigma2_full_conditional(z: &[Point], s: &[usize], mu_k: Point, k: usize, hyper: &Hyperparams) -> Sigma2Posterior {
    let mut n_k = 0usize;
    let mut ss = [0.0; 2];
    for (p, &sk) in z.iter().zip(s) {
        if sk == k {
            n_k += 1;
            ss[0] += (p[0] - mu_k[0]).powi(2);
            ss[1] += (p[1] - mu_k[1]).powi(2);
        }
    }
    Sigma2Posterior {
        u_star: hyper.u_sigma2 + n_k as f64 / 2.0,
        v_star: [hyper.v_sigma2 + 0.5 * ss[0], hyper.v_sigma2 + 0.5 * ss[1]],
    }
}

/// Log acceptance ratio of a block move of one latent space, direct form.
#[allow(clippy::too_many_arguments)]
pub fn mh_logratio_z(
    nets: &[&Network],
    z_cur: &[Point],
    z_prop: &[Point],
    s: &[usize],
    mu: &[Point],
    sigma2: &[Point],
    alpha: f64,
    family: EdgeFamily,
) -> f64 {
    let mut lr = 0.0;
    for y in nets {
        lr += network_loglik(y, z_prop, alpha, family) - network_loglik(y, z_cur, alpha, family);
    }
    for i in 0..z_cur.len() {
        let k = s[i];
        lr += logpdf_mvn_diag_unchecked(z_prop[i], mu[k], sigma2[k]) - logpdf_mvn_diag_unchecked(z_cur[i], mu[k], sigma2[k]);
    }
    lr
}

/// Log acceptance ratio of an intercept move, direct form.
pub fn mh_logratio_alpha(
    nets: &[Network],
    c: &[usize],
    z_all: &[Vec<Point>],
    alpha_cur: f64,
    alpha_prop: f64,
    hyper: &Hyperparams,
) -> f64 {
    let mut lr = logpdf_normal(alpha_prop, hyper.m_alpha, hyper.s_alpha) - logpdf_normal(alpha_cur, hyper.m_alpha, hyper.s_alpha);
    for (y, &g) in nets.iter().zip(c) {
        lr += network_loglik(y, &z_all[g], alpha_prop, y.family()) - network_loglik(y, &z_all[g], alpha_cur, y.family());
    }
    lr
}

/// Log target of a mixture concentration with the weights integrated out:
/// F prior, times `x^{K+} Gamma(x) / Gamma(n + x)`, times
/// `prod_h Gamma(n_h + x/K) / Gamma(1 + x/K)` over occupied clusters.
pub fn concentration_log_target(x: f64, counts: &[usize], k_total: usize, n_items: usize, l: f64, r: f64) -> f64 {
    let kf = k_total as f64;
    let mut t = logpdf_fisher_f_unchecked(x, l, r) + counts.len() as f64 * x.ln() + ln_gamma(x) - ln_gamma(n_items as f64 + x);
    for &nh in counts {
        t += ln_gamma(nh as f64 + x / kf) - ln_gamma(1.0 + x / kf);
    }
    t
}

/// Log acceptance ratio for a log-normal random-walk move of a concentration,
/// including the Jacobian `log(x_prop / x_cur)`.
pub fn mh_logratio_concentration(
    x_cur: f64,
    x_prop: f64,
    counts: &[usize],
    k_total: usize,
    n_items: usize,
    l: f64,
    r: f64,
) -> Result<f64> {
    if !(x_cur > 0.0 && x_prop > 0.0) {
        return Err(domain(format!("concentrations must be positive, got {x_cur} and {x_prop}")));
    }
    if x_cur == x_prop {
        return Ok(0.0);
    }
    Ok(concentration_log_target(x_prop, counts, k_total, n_items, l, r)
        - concentration_log_target(x_cur, counts, k_total, n_items, l, r)
        + x_prop.ln()
        - x_cur.ln())
}

/// Normalized log weights of the number of components over `k_plus..=k_max`,
/// given the occupied cluster sizes and the concentration.
pub fn component_count_logweights(
    k_plus: usize,
    counts: &[usize],
    conc: f64,
    k_max: usize,
    bnb: &BnbParams,
) -> Result<Vec<f64>> {
    if k_plus < 1 || k_plus > k_max {
        return Err(Error::Contract(format!("need 1 <= K+ <= k_max, got K+={k_plus}, k_max={k_max}")));
    }
    if counts.len() != k_plus || counts.contains(&0) {
        return Err(Error::Contract(format!("expected {k_plus} positive cluster sizes, got {counts:?}")));
    }
    let kp = k_plus as f64;
    let mut lw: Vec<f64> = (k_plus..=k_max)
        .map(|k| {
            let kf = k as f64;
            let mut v = logpmf_translated_bnb_unchecked(k, bnb) + kp * conc.ln() + ln_gamma(kf + 1.0)
                - kp * kf.ln()
                - ln_gamma(kf - kp + 1.0);
            for &nh in counts {
                v += ln_gamma(nh as f64 + conc / kf) - ln_gamma(1.0 + conc / kf);
            }
            v
        })
        .collect();
    normalize_log(&mut lw);
    Ok(lw)
}
