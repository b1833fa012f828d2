//! Log-densities and samplers for the distributions used by the model.
//!
//! Everything is evaluated in log space. The `*_unchecked` variants skip domain
//! checks and are meant for inner loops whose inputs are valid by construction.

use rand::Rng;
use rand_distr::{Beta, Distribution, FisherF, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub use statrs::function::beta::ln_beta;
pub use statrs::function::gamma::ln_gamma;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Observation model of the edges, tied to the data family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeFamily {
    /// Binary edges with a logit link.
    #[serde(rename = "binary", alias = "bernoulli-logit")]
    Binary,
    /// Count edges with a log link.
    #[serde(rename = "count", alias = "poisson-log")]
    Count,
}

impl EdgeFamily {
    pub fn link_name(self) -> &'static str {
        match self {
            EdgeFamily::Binary => "bernoulli-logit",
            EdgeFamily::Count => "poisson-log",
        }
    }
}

/// `log(1 + exp(x))` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub fn ln_factorial(y: u32) -> f64 {
    if y < 2 {
        0.0
    } else {
        ln_gamma(y as f64 + 1.0)
    }
}

pub fn edge_logpmf(y: u32, eta: f64, family: EdgeFamily) -> Result<f64> {
    if family == EdgeFamily::Binary && y > 1 {
        return Err(domain(format!("bernoulli observation {y} is not 0 or 1")));
    }
    Ok(edge_logpmf_unchecked(y, eta, family))
}

#[inline]
pub fn edge_logpmf_unchecked(y: u32, eta: f64, family: EdgeFamily) -> f64 {
    match family {
        EdgeFamily::Count => y as f64 * eta - eta.exp() - ln_factorial(y),
        EdgeFamily::Binary => -softplus(if y == 1 { -eta } else { eta }),
    }
}

pub fn logpdf_mvn_diag(x: [f64; 2], mu: [f64; 2], sigma2: [f64; 2]) -> Result<f64> {
    if !(sigma2[0] > 0.0 && sigma2[1] > 0.0) {
        return Err(domain(format!("variances must be positive, got {sigma2:?}")));
    }
    Ok(logpdf_mvn_diag_unchecked(x, mu, sigma2))
}

#[inline]
pub fn logpdf_mvn_diag_unchecked(x: [f64; 2], mu: [f64; 2], sigma2: [f64; 2]) -> f64 {
    let d0 = x[0] - mu[0];
    let d1 = x[1] - mu[1];
    -LN_2PI - 0.5 * (sigma2[0].ln() + sigma2[1].ln()) - 0.5 * (d0 * d0 / sigma2[0] + d1 * d1 / sigma2[1])
}

/// Parameters of a beta-negative-binomial prior on `count - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnbParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl BnbParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let p = Self { a, b, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a > 0.0 && self.b > 0.0 && self.c > 0.0 {
            Ok(())
        } else {
            Err(domain(format!("BNB parameters must be positive, got {self:?}")))
        }
    }

    /// Mean of the translated distribution, infinite when `b <= 1`.
    pub fn translated_mean(&self) -> f64 {
        if self.b > 1.0 {
            1.0 + self.a * self.c / (self.b - 1.0)
        } else {
            f64::INFINITY
        }
    }
}

impl Default for BnbParams {
    fn default() -> Self {
        Self { a: 8.0, b: 18.0, c: 10.0 }
    }
}

/// Log pmf of `k` where `k - 1` follows BNB(a, b, c), so the support starts at 1.
pub fn logpmf_translated_bnb(k: usize, p: &BnbParams) -> Result<f64> {
    if k < 1 {
        return Err(domain("translated BNB support starts at 1"));
    }
    p.validate()?;
    Ok(logpmf_translated_bnb_unchecked(k, p))
}

#[inline]
pub fn logpmf_translated_bnb_unchecked(k: usize, p: &BnbParams) -> f64 {
    let k = k as f64;
    ln_gamma(p.a + k - 1.0) + ln_beta(p.a + p.b, k - 1.0 + p.c) - ln_gamma(p.a) - ln_gamma(k) - ln_beta(p.b, p.c)
}

/// Draws from the translated BNB as a negative binomial with a beta-distributed
/// success probability.
pub fn sample_translated_bnb<R: Rng + ?Sized>(p: &BnbParams, rng: &mut R) -> Result<usize> {
    p.validate()?;
    let beta = Beta::new(p.b, p.c).map_err(|e| domain(e.to_string()))?;
    let prob: f64 = beta.sample(rng).clamp(f64::MIN_POSITIVE, 1.0);
    if prob >= 1.0 {
        return Ok(1);
    }
    let rate: f64 = Gamma::new(p.a, (1.0 - prob) / prob).map_err(|e| domain(e.to_string()))?.sample(rng);
    if rate <= 0.0 {
        return Ok(1);
    }
    let draw: f64 = Poisson::new(rate).map_err(|e| domain(e.to_string()))?.sample(rng);
    Ok(1 + draw as usize)
}

pub fn logpdf_fisher_f(x: f64, l: f64, r: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(format!("F density needs x > 0, got {x}")));
    }
    if !(l > 0.0 && r > 0.0) {
        return Err(domain("F degrees of freedom must be positive"));
    }
    Ok(logpdf_fisher_f_unchecked(x, l, r))
}

#[inline]
pub fn logpdf_fisher_f_unchecked(x: f64, l: f64, r: f64) -> f64 {
    0.5 * (l * (l * x).ln() + r * r.ln() - (l + r) * (l * x + r).ln()) - x.ln() - ln_beta(l / 2.0, r / 2.0)
}

pub fn sample_fisher_f<R: Rng + ?Sized>(l: f64, r: f64, rng: &mut R) -> Result<f64> {
    let f = FisherF::new(l, r).map_err(|e| domain(e.to_string()))?;
    // guard against an exact zero from an underflowing chi-square numerator
    Ok(f.sample(rng).max(f64::MIN_POSITIVE))
}

/// Log of a Gamma(shape, 1) draw. Shapes below one use the boosting identity
/// `G(a) = G(a + 1) * U^(1/a)`, which stays finite even when the draw itself
/// would underflow to zero.
pub fn sample_log_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(domain(format!("gamma shape must be positive and finite, got {shape}")));
    }
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0).map_err(|e| domain(e.to_string()))?.sample(rng);
        Ok(g.max(f64::MIN_POSITIVE).ln())
    } else {
        let g: f64 = Gamma::new(shape + 1.0, 1.0).map_err(|e| domain(e.to_string()))?.sample(rng);
        let u: f64 = 1.0 - rng.random::<f64>();
        Ok(g.max(f64::MIN_POSITIVE).ln() + u.ln() / shape)
    }
}

/// Dirichlet draw returned as log weights, normalized by log-sum-exp.
pub fn sample_log_dirichlet<R: Rng + ?Sized>(conc: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if conc.is_empty() {
        return Err(domain("Dirichlet needs at least one concentration"));
    }
    let mut out = conc.iter().map(|&a| sample_log_gamma(a, rng)).collect::<Result<Vec<_>>>()?;
    normalize_log(&mut out);
    Ok(out)
}

pub fn sample_dirichlet<R: Rng + ?Sized>(conc: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let mut v = sample_log_dirichlet(conc, rng)?;
    for x in v.iter_mut() {
        *x = x.exp();
    }
    let s: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= s;
    }
    Ok(v)
}

pub fn logpdf_dirichlet(log_x: &[f64], conc: &[f64]) -> f64 {
    let total: f64 = conc.iter().sum();
    let mut lp = ln_gamma(total);
    for (&lx, &a) in log_x.iter().zip(conc) {
        lp += (a - 1.0) * lx - ln_gamma(a);
    }
    lp
}

pub fn sample_invgamma<R: Rng + ?Sized>(u: f64, v: f64, rng: &mut R) -> Result<f64> {
    if !(u > 0.0 && v > 0.0) {
        return Err(domain(format!("inverse gamma needs u, v > 0, got ({u}, {v})")));
    }
    let g: f64 = Gamma::new(u, 1.0 / v).map_err(|e| domain(e.to_string()))?.sample(rng);
    Ok(1.0 / g.max(f64::MIN_POSITIVE))
}

pub fn logpdf_invgamma(x: f64, u: f64, v: f64) -> Result<f64> {
    if !(x > 0.0 && u > 0.0 && v > 0.0) {
        return Err(domain(format!("inverse gamma density needs x, u, v > 0, got ({x}, {u}, {v})")));
    }
    Ok(logpdf_invgamma_unchecked(x, u, v))
}

#[inline]
pub fn logpdf_invgamma_unchecked(x: f64, u: f64, v: f64) -> f64 {
    -(u + 1.0) * x.ln() - v / x + u * v.ln() - ln_gamma(u)
}

#[inline]
pub fn logpdf_normal(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * LN_2PI - sd.ln() - 0.5 * z * z
}

#[inline]
pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn logsumexp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Shifts `v` so that it exponentiates to a probability vector.
pub fn normalize_log(v: &mut [f64]) {
    let z = logsumexp(v);
    for x in v.iter_mut() {
        *x -= z;
    }
}

/// Index drawn with probabilities proportional to `exp(logw)`.
pub fn sample_categorical_log<R: Rng + ?Sized>(logw: &[f64], rng: &mut R) -> usize {
    let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    let w: Vec<f64> = logw
        .iter()
        .map(|&x| {
            let p = (x - m).exp();
            total += p;
            p
        })
        .collect();
    let mut u = rng.random::<f64>() * total;
    for (k, p) in w.iter().enumerate() {
        if u < *p {
            return k;
        }
        u -= p;
    }
    // rounding fall-through lands on the last positive weight
    w.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}
