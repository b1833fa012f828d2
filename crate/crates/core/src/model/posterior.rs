use super::{Geometry, Model, ModelState, Variant};
use crate::distributions::{
    logpdf_dirichlet, logpdf_fisher_f_unchecked, logpdf_invgamma_unchecked, logpdf_mvn_diag_unchecked, logpdf_normal,
    logpmf_translated_bnb_unchecked,
};

/// Unnormalized log joint density of a state and the data.
///
/// Sums the log-likelihood of every network under its allocated component and
/// every prior factor. Components beyond `G` do not exist; empty components
/// up to `G` contribute their prior terms.
pub fn log_posterior(state: &ModelState, model: &Model) -> f64 {
    let h = &model.hyper;
    let mut lp = 0.0;

    let geos: Vec<Option<Geometry>> = {
        let counts = state.network_counts();
        state
            .comps
            .iter()
            .zip(&counts)
            .map(|(c, &m)| (m > 0 && !model.data.data_free).then(|| Geometry::new(&c.z, model.data.family)))
            .collect()
    };
    for (m, &g) in state.c.iter().enumerate() {
        if let Some(geo) = &geos[g] {
            let shared = model.data.shared(geo, state.alpha);
            lp += model.data.loglik(m, geo, state.alpha, shared);
        }
        lp += state.log_tau[g];
    }

    lp += logpdf_normal(state.alpha, h.m_alpha, h.s_alpha);
    lp += logpmf_translated_bnb_unchecked(state.g, &h.bnb_g);
    lp += logpdf_fisher_f_unchecked(state.e, h.l_g, h.r_g);
    lp += logpdf_dirichlet(&state.log_tau, &vec![state.e / state.g as f64; state.g]);

    for comp in &state.comps {
        match model.variant {
            Variant::MonoLapcm => {
                for &z in &comp.z {
                    lp += logpdf_mvn_diag_unchecked(z, [0.0, 0.0], [1.0, 1.0]);
                }
            }
            Variant::Lapcom => {
                lp += logpmf_translated_bnb_unchecked(comp.k, &h.bnb_k);
                lp += logpdf_fisher_f_unchecked(comp.w, h.l_k, h.r_k);
                lp += logpdf_dirichlet(&comp.log_pi, &vec![comp.w / comp.k as f64; comp.k]);
                for (&z, &s) in comp.z.iter().zip(&comp.s) {
                    lp += comp.log_pi[s] + logpdf_mvn_diag_unchecked(z, comp.mu[s], comp.sigma2[s]);
                }
                for k in 0..comp.k {
                    lp += logpdf_mvn_diag_unchecked(comp.mu[k], h.mu0, [h.sigma_mu, h.sigma_mu]);
                    for q in 0..2 {
                        lp += logpdf_invgamma_unchecked(comp.sigma2[k][q], h.u_sigma2, h.v_sigma2);
                    }
                }
            }
        }
    }
    lp
}
