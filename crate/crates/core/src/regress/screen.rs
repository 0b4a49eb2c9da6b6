//! Response-distribution screening: maximum-likelihood fits of five
//! candidate families ranked by log-likelihood, with QQ data for the winner.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Exp, Gamma, LogNormal, Weibull};

use super::invgauss;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionFit {
    pub name: String,
    pub params: Vec<(String, f64)>,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QqPoint {
    pub theoretical: f64,
    pub empirical: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScreenReport {
    /// Candidates ranked by log-likelihood, best first.
    pub ranking: Vec<DistributionFit>,
    /// QQ data for the winner, one point per observation.
    pub qq: Vec<QqPoint>,
    pub degenerate: bool,
}

fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iterations: usize) -> f64 {
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iterations {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

fn loglik_inverse_gaussian(y: &[f64]) -> DistributionFit {
    let (mu, lambda) = invgauss::mle(y);
    let ll = y.iter().map(|&v| invgauss::ln_pdf(v, mu, lambda)).sum();
    DistributionFit {
        name: "inverse_gaussian".into(),
        params: vec![("mu".into(), mu), ("lambda".into(), lambda)],
        log_likelihood: ll,
    }
}

fn loglik_gamma(y: &[f64]) -> DistributionFit {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let profile = |ln_k: f64| -> f64 {
        let k = ln_k.exp();
        let theta = mean / k;
        match Gamma::new(k, 1.0 / theta) {
            Ok(dist) => y.iter().map(|&v| dist.ln_pdf(v)).sum(),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let ln_k = golden_section_max(profile, (1e-3f64).ln(), (1e3f64).ln(), 200);
    let k = ln_k.exp();
    let theta = mean / k;
    DistributionFit {
        name: "gamma".into(),
        params: vec![("shape".into(), k), ("scale".into(), theta)],
        log_likelihood: profile(ln_k),
    }
}

fn loglik_lognormal(y: &[f64]) -> DistributionFit {
    let n = y.len() as f64;
    let mu = y.iter().map(|&v| v.ln()).sum::<f64>() / n;
    let sigma2 = y.iter().map(|&v| (v.ln() - mu) * (v.ln() - mu)).sum::<f64>() / n;
    let sigma = sigma2.sqrt().max(1e-12);
    let dist = LogNormal::new(mu, sigma).expect("valid parameters");
    DistributionFit {
        name: "log_normal".into(),
        params: vec![("mu_log".into(), mu), ("sigma_log".into(), sigma)],
        log_likelihood: y.iter().map(|&v| dist.ln_pdf(v)).sum(),
    }
}

fn loglik_exponential(y: &[f64]) -> DistributionFit {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let rate = 1.0 / mean;
    let dist = Exp::new(rate).expect("positive rate");
    DistributionFit {
        name: "exponential".into(),
        params: vec![("rate".into(), rate)],
        log_likelihood: y.iter().map(|&v| dist.ln_pdf(v)).sum(),
    }
}

fn loglik_weibull(y: &[f64]) -> DistributionFit {
    let n = y.len() as f64;
    let profile = |ln_k: f64| -> f64 {
        let k = ln_k.exp();
        let scale = (y.iter().map(|&v| v.powf(k)).sum::<f64>() / n).powf(1.0 / k);
        match Weibull::new(k, scale) {
            Ok(dist) => y.iter().map(|&v| dist.ln_pdf(v)).sum(),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let ln_k = golden_section_max(profile, (0.05f64).ln(), (50.0f64).ln(), 200);
    let k = ln_k.exp();
    let scale = (y.iter().map(|&v| v.powf(k)).sum::<f64>() / n).powf(1.0 / k);
    DistributionFit {
        name: "weibull".into(),
        params: vec![("shape".into(), k), ("scale".into(), scale)],
        log_likelihood: profile(ln_k),
    }
}

fn quantile_of(fit: &DistributionFit, p: f64) -> f64 {
    let param = |name: &str| {
        fit.params
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .expect("parameter present")
    };
    match fit.name.as_str() {
        "inverse_gaussian" => invgauss::quantile(p, param("mu"), param("lambda")),
        "gamma" => Gamma::new(param("shape"), 1.0 / param("scale"))
            .expect("valid parameters")
            .inverse_cdf(p),
        "log_normal" => LogNormal::new(param("mu_log"), param("sigma_log"))
            .expect("valid parameters")
            .inverse_cdf(p),
        "exponential" => Exp::new(param("rate")).expect("valid parameters").inverse_cdf(p),
        "weibull" => Weibull::new(param("shape"), param("scale"))
            .expect("valid parameters")
            .inverse_cdf(p),
        other => panic!("unknown distribution {other}"),
    }
}

/// Fits the five candidate families by maximum likelihood and ranks them.
/// Constant input is flagged degenerate without a ranking.
pub fn screen_distribution(y: &[f64]) -> ScreenReport {
    assert!(!y.is_empty(), "need at least one observation");
    assert!(y.iter().all(|&v| v > 0.0), "responses must be positive");
    if y.iter().all(|&v| v == y[0]) {
        return ScreenReport {
            ranking: Vec::new(),
            qq: Vec::new(),
            degenerate: true,
        };
    }
    let mut ranking = vec![
        loglik_inverse_gaussian(y),
        loglik_gamma(y),
        loglik_lognormal(y),
        loglik_exponential(y),
        loglik_weibull(y),
    ];
    ranking.sort_by(|a, b| b.log_likelihood.partial_cmp(&a.log_likelihood).unwrap());

    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let winner = &ranking[0];
    let n = sorted.len();
    let qq = sorted
        .iter()
        .enumerate()
        .map(|(i, &empirical)| QqPoint {
            theoretical: quantile_of(winner, (i as f64 + 0.5) / n as f64),
            empirical,
        })
        .collect();
    ScreenReport {
        ranking,
        qq,
        degenerate: false,
    }
}

/// Kolmogorov distance between the sample and the fitted winner, evaluated
/// from the QQ probability grid; tests use it to check calibration.
pub fn kolmogorov_distance(report: &ScreenReport, y: &[f64]) -> f64 {
    let winner = &report.ranking[0];
    let cdf_of = |x: f64| -> f64 {
        let param = |name: &str| {
            winner
                .params
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| *v)
                .expect("parameter present")
        };
        match winner.name.as_str() {
            "inverse_gaussian" => invgauss::cdf(x, param("mu"), param("lambda")),
            "gamma" => Gamma::new(param("shape"), 1.0 / param("scale")).unwrap().cdf(x),
            "log_normal" => LogNormal::new(param("mu_log"), param("sigma_log")).unwrap().cdf(x),
            "exponential" => Exp::new(param("rate")).unwrap().cdf(x),
            "weibull" => Weibull::new(param("shape"), param("scale")).unwrap().cdf(x),
            other => panic!("unknown distribution {other}"),
        }
    };
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf_of(x);
            let hi = (i as f64 + 1.0) / n - f;
            let lo = f - i as f64 / n;
            hi.abs().max(lo.abs())
        })
        .fold(0.0, f64::max)
}
