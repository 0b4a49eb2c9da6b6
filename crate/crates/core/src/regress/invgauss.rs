//! Inverse-Gaussian distribution pieces: log density, distribution function,
//! quantile by bisection, and the Michael-Schucany-Haas sampler.

use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::erf::erfc;

const LN_2PI: f64 = 1.837877066409345483560659472811;

/// log f(x; mu, lambda) for x > 0.
pub fn ln_pdf(x: f64, mu: f64, lambda: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    0.5 * ((lambda / (x * x * x)).ln() - LN_2PI)
        - lambda * (x - mu) * (x - mu) / (2.0 * mu * mu * x)
}

fn normal_cdf(t: f64) -> f64 {
    0.5 * erfc(-t / std::f64::consts::SQRT_2)
}

fn ln_normal_cdf(t: f64) -> f64 {
    let c = normal_cdf(t);
    if c > 0.0 {
        c.ln()
    } else {
        // asymptotic tail: ln Phi(t) ~ -t^2/2 - ln(-t) - ln sqrt(2 pi)
        -0.5 * t * t - (-t).ln() - 0.5 * LN_2PI
    }
}

/// F(x; mu, lambda), evaluated with the exp term kept in log space so large
/// `2 lambda / mu` does not overflow.
pub fn cdf(x: f64, mu: f64, lambda: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let s = (lambda / x).sqrt();
    let term1 = normal_cdf(s * (x / mu - 1.0));
    let ln_term2 = 2.0 * lambda / mu + ln_normal_cdf(-s * (x / mu + 1.0));
    let term2 = if ln_term2 < -700.0 { 0.0 } else { ln_term2.exp() };
    (term1 + term2).clamp(0.0, 1.0)
}

/// Quantile by bisection on the CDF.
pub fn quantile(p: f64, mu: f64, lambda: f64) -> f64 {
    assert!((0.0..1.0).contains(&p), "p must be in [0, 1)");
    if p <= 0.0 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = mu;
    while cdf(hi, mu, lambda) < p {
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid, mu, lambda) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Michael-Schucany-Haas transformation sampler.
pub fn sample<R: rand::Rng>(rng: &mut R, mu: f64, lambda: f64) -> f64 {
    let nu: f64 = StandardNormal.sample(rng);
    let y = nu * nu;
    let x = mu + mu * mu * y / (2.0 * lambda)
        - mu / (2.0 * lambda) * (4.0 * mu * lambda * y + mu * mu * y * y).sqrt();
    let u: f64 = rng.random();
    if u <= mu / (mu + x) {
        x.max(f64::MIN_POSITIVE)
    } else {
        mu * mu / x.max(f64::MIN_POSITIVE)
    }
}

/// Closed-form maximum-likelihood estimates `(mu, lambda)`.
pub fn mle(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let inv_gap: f64 = values.iter().map(|&y| 1.0 / y - 1.0 / mu).sum();
    let lambda = if inv_gap > 0.0 { n / inv_gap } else { f64::INFINITY };
    (mu, lambda)
}
