//! Averaged periodograms and the spectral exponent `S(f) ~ f^-beta`.

use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::ols;
use crate::error::{Error, Result};
use crate::returns::PricePanel;

const MIN_LENGTH: usize = 64;
const MIN_BAND_BINS: usize = 10;

/// One-sided periodogram on the positive frequencies `k / length`,
/// `k = 1..=length / 2`, in cycles per day.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    pub length: usize,
    pub n_series: usize,
    pub beta: Option<f64>,
    pub beta_stderr: Option<f64>,
    pub band: Option<(f64, f64)>,
}

impl PsdEstimate {
    /// `(1 / length) * sum over all two-sided bins`; equals the mean
    /// population variance of the input series (Parseval).
    pub fn total_power(&self) -> f64 {
        let n = self.length;
        let mut total = 0.0;
        for (k, p) in self.power.iter().enumerate() {
            let bin = k + 1;
            let weight = if n % 2 == 0 && bin == n / 2 { 1.0 } else { 2.0 };
            total += weight * p;
        }
        total / n as f64
    }
}

fn series_power(series: &[f64]) -> Vec<f64> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = series.iter().map(|&x| Complex::new(x - mean, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    (1..=n / 2).map(|k| buf[k].norm_sqr() / n as f64).collect()
}

/// Mean periodogram of equal-length series, each mean-removed.
pub fn periodogram<S: AsRef<[f64]> + Sync>(series: &[S]) -> Result<PsdEstimate> {
    let first = series.first().ok_or(Error::Empty("series"))?;
    let n = first.as_ref().len();
    if n < MIN_LENGTH {
        return Err(Error::InsufficientData(format!("periodogram needs >= {MIN_LENGTH} points, got {n}")));
    }
    if let Some(s) = series.iter().find(|s| s.as_ref().len() != n) {
        return Err(Error::LengthMismatch { left: n, right: s.as_ref().len() });
    }
    let spectra: Vec<Vec<f64>> = series.par_iter().map(|s| series_power(s.as_ref())).collect();
    let m = spectra.len() as f64;
    let mut power = vec![0.0; n / 2];
    for sp in &spectra {
        for (acc, p) in power.iter_mut().zip(sp) {
            *acc += p;
        }
    }
    power.iter_mut().for_each(|p| *p /= m);
    Ok(PsdEstimate {
        freqs: (1..=n / 2).map(|k| k as f64 / n as f64).collect(),
        power,
        length: n,
        n_series: series.len(),
        beta: None,
        beta_stderr: None,
        band: None,
    })
}

/// Periodogram averaged over the price columns of a panel.
pub fn periodogram_panel(panel: &PricePanel) -> Result<PsdEstimate> {
    let cols: Vec<Vec<f64>> = (0..panel.n_assets()).map(|i| panel.column(i)).collect();
    periodogram(&cols)
}

/// Lowest two decades of positive frequencies.
pub fn default_band(psd: &PsdEstimate) -> (f64, f64) {
    let lo = psd.freqs[0];
    let hi = (lo * 100.0).min(*psd.freqs.last().unwrap());
    (lo, hi)
}

/// Least-squares slope of `ln power` against `ln f` inside `band`; stores
/// `beta = -slope`.
pub fn fit_spectral_exponent(psd: &PsdEstimate, band: (f64, f64)) -> Result<PsdEstimate> {
    // tolerate rounding in the band edges
    let (lo, hi) = (band.0 * (1.0 - 1e-12), band.1 * (1.0 + 1e-12));
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (&f, &p) in psd.freqs.iter().zip(&psd.power) {
        if f >= lo && f <= hi {
            if !(p > 0.0) {
                return Err(Error::Degenerate(format!("zero power at f = {f}")));
            }
            x.push(f.ln());
            y.push(p.ln());
        }
    }
    if x.len() < MIN_BAND_BINS {
        return Err(Error::InsufficientData(format!(
            "band {band:?} holds {} bins, need >= {MIN_BAND_BINS}",
            x.len()
        )));
    }
    let fit = ols(&x, &y)?;
    Ok(PsdEstimate {
        beta: Some(-fit.slope),
        beta_stderr: Some(fit.slope_stderr),
        band: Some(band),
        ..psd.clone()
    })
}
