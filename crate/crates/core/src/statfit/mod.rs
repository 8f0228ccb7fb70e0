//! Estimators: power-law tails, spectral exponents, Student-t fits,
//! log-binned histograms and a few shared helpers.

mod hist;
mod psd;
mod regression;
mod tail;
mod tdist;

pub use hist::{log_binned_histogram, Histogram};
pub use psd::{default_band, fit_spectral_exponent, periodogram, periodogram_panel, PsdEstimate};
pub use regression::{ols, LinearFit};
pub use tail::{
    hill_estimate, hill_tail_exponent, powerlaw_fit_ks, tail_model_comparison, TailComparison,
    TailFit, DEFAULT_TAIL_FRACTION,
};
pub use tdist::{student_t_fit, TDistFit, NU_MAX, NU_MIN};

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

const SUM_CHUNK: usize = 8192;

/// Sum with a fixed chunking, so the result does not depend on how many
/// threads rayon happens to use.
pub(crate) fn det_sum<F>(xs: &[f64], f: F) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    if xs.len() <= SUM_CHUNK {
        return xs.iter().map(|&x| f(x)).sum();
    }
    let partial: Vec<f64> = xs
        .par_chunks(SUM_CHUNK)
        .map(|c| c.iter().map(|&x| f(x)).sum::<f64>())
        .collect();
    partial.iter().sum()
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sorted copy; NaNs are not expected here.
pub(crate) fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.par_sort_unstable_by(|a, b| a.total_cmp(b));
    v
}

/// Two-sample Kolmogorov–Smirnov distance `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let a = sorted(a);
    let b = sorted(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut m = k;
        while m + 1 < idx.len() && xs[idx[m + 1]] == xs[idx[k]] {
            m += 1;
        }
        let avg = (k + m) as f64 / 2.0 + 1.0;
        for &i in &idx[k..=m] {
            r[i] = avg;
        }
        k = m + 1;
    }
    r
}

/// Spearman rank correlation and its two-sided p-value (t approximation).
pub fn spearman(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx).powi(2);
        syy += (ry[i] - my).powi(2);
    }
    let rho = sxy / (sxx * syy).sqrt();
    if n < 3 {
        return (rho, 1.0);
    }
    if rho.abs() >= 1.0 {
        return (rho.signum(), 0.0);
    }
    let df = (n - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid t distribution");
    (rho, 2.0 * (1.0 - dist.cdf(t.abs())))
}
