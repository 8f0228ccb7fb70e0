//! Power-law tail estimation for densities `P(x) ~ x^-(1 + alpha)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sorted;
use crate::error::{Error, Result};

pub const DEFAULT_TAIL_FRACTION: f64 = 0.1;

const MIN_TAIL: usize = 10;
const KS_MIN_TAIL: usize = 50;
const KS_CANDIDATES: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub exponent: f64,
    pub x_min: f64,
    pub n_tail: usize,
    pub stderr: f64,
    pub ks: f64,
}

/// Hill / continuous maximum-likelihood exponent `k / sum ln(x_i / x_min)`.
pub fn hill_estimate(tail: &[f64], x_min: f64) -> Result<f64> {
    if tail.is_empty() {
        return Err(Error::Empty("tail"));
    }
    let s: f64 = tail.iter().map(|x| (x / x_min).ln()).sum();
    if !(s > 0.0) {
        return Err(Error::Degenerate("tail has zero log-spacing above x_min".into()));
    }
    Ok(tail.len() as f64 / s)
}

/// KS distance between the sorted tail sample and `1 - (x / x_min)^-alpha`.
fn ks_distance(tail_sorted: &[f64], x_min: f64, alpha: f64) -> f64 {
    let k = tail_sorted.len() as f64;
    tail_sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (-alpha * (x / x_min).ln()).exp();
            let lo = i as f64 / k;
            let hi = (i + 1) as f64 / k;
            (f - lo).abs().max((hi - f).abs())
        })
        .fold(0.0, f64::max)
}

fn check_positive(samples: &[f64]) -> Result<()> {
    if let Some(x) = samples.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidParameter(format!("samples must be positive and finite, found {x}")));
    }
    Ok(())
}

/// Hill estimator with the cutoff at the empirical `1 - tail_fraction` quantile.
pub fn hill_tail_exponent(samples: &[f64], tail_fraction: f64) -> Result<TailFit> {
    if samples.len() < 100 {
        return Err(Error::InsufficientData(format!("Hill needs >= 100 samples, got {}", samples.len())));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 0.5) {
        return Err(Error::InvalidParameter(format!("tail_fraction must be in (0, 0.5], got {tail_fraction}")));
    }
    check_positive(samples)?;
    let v = sorted(samples);
    let n = v.len();
    let k = (n as f64 * tail_fraction).floor() as usize;
    if k < MIN_TAIL {
        return Err(Error::InsufficientData(format!("only {k} tail samples")));
    }
    let x_min = v[n - k - 1];
    let tail = &v[n - k..];
    let exponent = hill_estimate(tail, x_min)?;
    Ok(TailFit {
        exponent,
        x_min,
        n_tail: k,
        stderr: exponent / (k as f64).sqrt(),
        ks: ks_distance(tail, x_min, exponent),
    })
}

/// Tail sizes probed by the KS scan: log-spaced from the whole sample down to
/// `KS_MIN_TAIL` points.
fn candidate_tail_sizes(n: usize) -> Vec<usize> {
    let lo = (KS_MIN_TAIL as f64).ln();
    let hi = (n as f64).ln();
    let mut ks: Vec<usize> = (0..KS_CANDIDATES)
        .map(|i| (lo + (hi - lo) * i as f64 / (KS_CANDIDATES - 1) as f64).exp().round() as usize)
        .map(|k| k.clamp(KS_MIN_TAIL, n))
        .collect();
    ks.dedup();
    ks
}

/// Scan `x_min` over sample quantiles, fit the exponent by maximum
/// likelihood above each candidate and keep the fit with the smallest KS
/// distance.
pub fn powerlaw_fit_ks(samples: &[f64]) -> Result<TailFit> {
    if samples.len() < 500 {
        return Err(Error::InsufficientData(format!(
            "KS scan needs >= 500 samples, got {}",
            samples.len()
        )));
    }
    check_positive(samples)?;
    let v = sorted(samples);
    let n = v.len();
    let logs: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    // suffix[i] = sum of logs[i..]
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + logs[i];
    }
    let fits: Vec<TailFit> = candidate_tail_sizes(n)
        .into_par_iter()
        .filter_map(|k| {
            let start = n - k;
            let x_min = v[start];
            let s = suffix[start] - k as f64 * logs[start];
            if !(s > 0.0) {
                return None;
            }
            let alpha = k as f64 / s;
            let tail = &v[start..];
            Some(TailFit {
                exponent: alpha,
                x_min,
                n_tail: k,
                stderr: alpha / (k as f64).sqrt(),
                ks: ks_distance(tail, x_min, alpha),
            })
        })
        .collect();
    fits.into_iter()
        .min_by(|a, b| a.ks.total_cmp(&b.ks).then(b.n_tail.cmp(&a.n_tail)))
        .ok_or_else(|| Error::InsufficientData(format!("no x_min candidate with >= {KS_MIN_TAIL} tail points")))
}

/// Power law against shifted exponential above a shared cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailComparison {
    pub x_min: f64,
    pub n_tail: usize,
    /// `loglik(power law) - loglik(exponential)`; positive favours the power law.
    pub loglik_ratio: f64,
    /// Vuong statistic `R / (sigma sqrt(n))`.
    pub normalized_ratio: f64,
    pub p_value: f64,
    pub power_law: TailFit,
    pub exp_rate: f64,
}

impl TailComparison {
    /// Sign of the log-likelihood ratio; positive favors the power law.
    pub fn favors_power_law(&self) -> bool {
        self.loglik_ratio > 0.0
    }

    /// Whether the sign of the ratio is significant at `level`.
    pub fn is_significant(&self, level: f64) -> bool {
        self.p_value < level
    }
}

pub fn tail_model_comparison(samples: &[f64]) -> Result<TailComparison> {
    if samples.len() < 1000 {
        return Err(Error::InsufficientData(format!(
            "tail comparison needs >= 1000 samples, got {}",
            samples.len()
        )));
    }
    let pl = powerlaw_fit_ks(samples)?;
    let x_min = pl.x_min;
    let tail: Vec<f64> = samples.iter().copied().filter(|&x| x >= x_min).collect();
    let k = tail.len() as f64;
    let alpha = hill_estimate(&tail, x_min)?;
    let excess_mean = tail.iter().map(|x| x - x_min).sum::<f64>() / k;
    if !(excess_mean > 0.0) {
        return Err(Error::Degenerate("tail has no spread above x_min".into()));
    }
    let rate = 1.0 / excess_mean;
    let pointwise: Vec<f64> = tail
        .iter()
        .map(|&x| {
            let lp = (alpha / x_min).ln() - (1.0 + alpha) * (x / x_min).ln();
            let le = rate.ln() - rate * (x - x_min);
            lp - le
        })
        .collect();
    let r: f64 = pointwise.iter().sum();
    let m = r / k;
    let sd = (pointwise.iter().map(|d| (d - m).powi(2)).sum::<f64>() / k).sqrt();
    let (normalized_ratio, p_value) = if sd > 0.0 {
        let z = r / (sd * k.sqrt());
        (z, statrs::function::erf::erfc(z.abs() / std::f64::consts::SQRT_2))
    } else {
        (0.0, 1.0)
    };
    Ok(TailComparison {
        x_min,
        n_tail: tail.len(),
        loglik_ratio: r,
        normalized_ratio,
        p_value,
        power_law: TailFit { exponent: alpha, n_tail: tail.len(), stderr: alpha / k.sqrt(), ..pl },
        exp_rate: rate,
    })
}
