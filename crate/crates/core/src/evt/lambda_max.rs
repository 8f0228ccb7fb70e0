//! Largest-eigenvalue samples and `<lambda_max>(Q)` curves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::returns::{epoch_matrices, epoch_starts, EpochMatrix, ReturnPanel};
use crate::rng::child_seed;
use crate::spectra::{lambda_max, shuffle_matrix, Spectrum};

pub const DEFAULT_RESCALE_EXPONENT: f64 = 0.44;
/// Points backed by fewer epochs are flagged.
pub const MIN_EPOCHS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveSource {
    Empirical,
    ModelR,
    ModelL,
    Shuffled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaMaxPoint {
    pub q: f64,
    pub t: usize,
    pub mean: f64,
    pub stderr: f64,
    pub n_epochs: usize,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaMaxCurve {
    pub points: Vec<LambdaMaxPoint>,
    pub source: CurveSource,
    /// Set when the means were multiplied by `Q^exponent`.
    pub rescale_exponent: Option<f64>,
}

impl LambdaMaxCurve {
    pub fn point_at_t(&self, t: usize) -> Option<&LambdaMaxPoint> {
        self.points.iter().find(|p| p.t == t)
    }
}

/// The top eigenvalue of each spectrum; all spectra must share `(T, N)`.
pub fn max_eigenvalue_samples(spectra: &[Spectrum]) -> Result<Vec<f64>> {
    let first = spectra.first().ok_or(Error::Empty("spectra"))?;
    if let Some(s) = spectra.iter().find(|s| s.t != first.t || s.n != first.n) {
        return Err(Error::MixedShapes { t1: first.t, n1: first.n, t2: s.t, n2: s.n });
    }
    Ok(spectra.iter().map(|s| s.lambda_max()).collect())
}

fn check_panels(panels: &[ReturnPanel]) -> Result<usize> {
    let first = panels.first().ok_or(Error::Empty("return panels"))?;
    let n = first.n_assets();
    if let Some(p) = panels.iter().find(|p| p.n_assets() != n) {
        return Err(Error::LengthMismatch { left: n, right: p.n_assets() });
    }
    if panels.iter().any(|p| !p.normalized) {
        return Err(Error::InvalidParameter("returns must be normalized".into()));
    }
    Ok(n)
}

/// `lambda_max` of every length-`t` epoch of every panel, in panel then epoch order.
pub fn lambda_max_samples(panels: &[ReturnPanel], t: usize, overlap: bool) -> Result<Vec<f64>> {
    check_panels(panels)?;
    let jobs: Vec<(usize, usize)> = panels
        .iter()
        .enumerate()
        .map(|(k, p)| {
            if t == 0 || t > p.n_rows() {
                Err(Error::EpochTooLong { t, available: p.n_rows() })
            } else {
                Ok(epoch_starts(p.n_rows(), t, overlap).into_iter().map(move |s| (k, s)))
            }
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    jobs.par_iter()
        .map(|&(k, s)| lambda_max(&EpochMatrix::new(panels[k].values.rows(s, t).into_owned(), s)))
        .collect()
}

/// `lambda_max` of disjoint epochs after shuffling every epoch's entries.
/// Epoch `j` (counted across panels) is shuffled with `child_seed(seed, j)`.
pub fn shuffled_lambda_max_samples(panels: &[ReturnPanel], t: usize, seed: u64) -> Result<Vec<f64>> {
    check_panels(panels)?;
    let mut epochs = Vec::new();
    for p in panels {
        epochs.extend(epoch_matrices(p, t, false)?);
    }
    epochs
        .par_iter()
        .enumerate()
        .map(|(j, e)| lambda_max(&shuffle_matrix(e, child_seed(seed, j as u64))))
        .collect()
}

fn summarize(samples: &[f64], t: usize, n: usize) -> LambdaMaxPoint {
    let k = samples.len();
    let mean = samples.iter().sum::<f64>() / k as f64;
    let stderr = if k > 1 {
        (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64 / k as f64).sqrt()
    } else {
        0.0
    };
    LambdaMaxPoint { q: t as f64 / n as f64, t, mean, stderr, n_epochs: k, flagged: k < MIN_EPOCHS }
}

/// Mean and standard error of `lambda_max` for each epoch length in `t_grid`.
pub fn mean_lambda_max_curve(
    panels: &[ReturnPanel],
    t_grid: &[usize],
    overlap: bool,
    source: CurveSource,
) -> Result<LambdaMaxCurve> {
    if t_grid.is_empty() {
        return Err(Error::Empty("Q grid"));
    }
    let n = check_panels(panels)?;
    let points = t_grid
        .iter()
        .map(|&t| Ok(summarize(&lambda_max_samples(panels, t, overlap)?, t, n)))
        .collect::<Result<_>>()?;
    Ok(LambdaMaxCurve { points, source, rescale_exponent: None })
}

/// Build a curve from precomputed samples per epoch length.
pub(crate) fn curve_from_samples(samples: &[(usize, Vec<f64>)], n: usize, source: CurveSource) -> LambdaMaxCurve {
    LambdaMaxCurve {
        points: samples.iter().map(|(t, s)| summarize(s, *t, n)).collect(),
        source,
        rescale_exponent: None,
    }
}

/// Multiply each mean (and its standard error) by `Q^exponent`.
pub fn rescale_curve(curve: &LambdaMaxCurve, exponent: f64) -> LambdaMaxCurve {
    let points = curve
        .points
        .iter()
        .map(|p| {
            let f = p.q.powf(exponent);
            LambdaMaxPoint { mean: p.mean * f, stderr: p.stderr * f, ..*p }
        })
        .collect();
    LambdaMaxCurve {
        points,
        source: curve.source,
        rescale_exponent: Some(curve.rescale_exponent.unwrap_or(0.0) + exponent),
    }
}
