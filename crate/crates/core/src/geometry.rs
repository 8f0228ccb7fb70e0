//! Gyration radius, path length and the `R_g ~ l^(1/d_f)` scaling fit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_walk::{WalkConfig, WalkPath2D};
use crate::returns::PricePanel;
use crate::statfit::ols;

/// Fraction of the smallest grid times discarded as transient before fitting.
pub const TRANSIENT_FRACTION: f64 = 0.1;
pub const DEFAULT_GRID_POINTS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: usize,
    pub ell: f64,
    pub rg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingCurve {
    pub points: Vec<CurvePoint>,
    pub n_samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarFit {
    pub value: f64,
    pub stderr: f64,
    pub range: (f64, f64),
}

/// `[(1/t) sum_{k=1..t} r_k^2]^(1/2)` about the origin.
pub fn gyration_radius(path: &WalkPath2D, t: usize) -> Result<f64> {
    let max = path.n_steps();
    if t == 0 || t > max {
        return Err(Error::TimeOutOfRange { t, max });
    }
    let s: f64 = path.positions[1..=t].iter().map(|[x, y]| x * x + y * y).sum();
    Ok((s / t as f64).sqrt())
}

/// Running gyration radii for every `t = 1..=n_steps`.
pub fn gyration_radii(path: &WalkPath2D) -> Vec<f64> {
    let mut acc = 0.0;
    path.positions[1..]
        .iter()
        .enumerate()
        .map(|(k, [x, y])| {
            acc += x * x + y * y;
            (acc / (k + 1) as f64).sqrt()
        })
        .collect()
}

/// Joint trajectory of two price series in the plane, shifted to start at the origin.
pub fn pair_stock_trajectory(series_a: &[f64], series_b: &[f64]) -> Result<WalkPath2D> {
    if series_a.len() != series_b.len() {
        return Err(Error::LengthMismatch { left: series_a.len(), right: series_b.len() });
    }
    if series_a.len() < 2 {
        return Err(Error::InsufficientData("pair trajectory needs >= 2 points".into()));
    }
    let (a0, b0) = (series_a[0], series_b[0]);
    let positions: Vec<[f64; 2]> = series_a.iter().zip(series_b).map(|(a, b)| [a - a0, b - b0]).collect();
    let step_lengths = positions
        .windows(2)
        .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
        .collect();
    // empirical paths carry no step-length floor
    let config = WalkConfig { alpha: f64::NAN, s_min: 0.0, n_steps: series_a.len() - 1, seed: 0 };
    Ok(WalkPath2D { positions, step_lengths, config })
}

/// All `(i, j)` pairs with `i < j`, optionally thinned to at most `max_pairs`
/// by taking every k-th pair in lexicographic order.
pub fn asset_pairs(n: usize, max_pairs: Option<usize>) -> Vec<(usize, usize)> {
    let all: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    match max_pairs {
        Some(m) if m > 0 && all.len() > m => {
            let stride = all.len().div_ceil(m);
            all.into_iter().step_by(stride).collect()
        }
        _ => all,
    }
}

/// `n_points` log-spaced distinct integer times in `1..=max_t`.
pub fn log_time_grid(max_t: usize, n_points: usize) -> Vec<usize> {
    if max_t == 0 || n_points == 0 {
        return Vec::new();
    }
    let hi = (max_t as f64).ln();
    let mut g: Vec<usize> = (0..n_points)
        .map(|i| {
            let f = if n_points == 1 { 1.0 } else { i as f64 / (n_points - 1) as f64 };
            ((hi * f).exp().round() as usize).clamp(1, max_t)
        })
        .collect();
    g.dedup();
    g
}

fn sample_on_grid(path: &WalkPath2D, t_grid: &[usize]) -> Vec<(f64, f64)> {
    let rg = gyration_radii(path);
    let ell = path.cumulative_lengths();
    t_grid.iter().map(|&t| (ell[t - 1], rg[t - 1])).collect()
}

fn average_curve(per_item: &[Vec<(f64, f64)>], t_grid: &[usize]) -> ScalingCurve {
    let m = per_item.len() as f64;
    let points = t_grid
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let (se, sr) = per_item.iter().fold((0.0, 0.0), |(a, b), v| (a + v[j].0, b + v[j].1));
            CurvePoint { t, ell: se / m, rg: sr / m }
        })
        .collect();
    ScalingCurve { points, n_samples: per_item.len() }
}

fn check_grid(t_grid: &[usize], shortest: usize) -> Result<()> {
    match t_grid.iter().find(|&&t| t == 0 || t > shortest) {
        Some(&t) => Err(Error::TimeOutOfRange { t, max: shortest }),
        None => Ok(()),
    }
}

/// Ensemble means of `l(t)` and `R_g(t)` on `t_grid`.
pub fn rg_vs_length_curve(paths: &[WalkPath2D], t_grid: &[usize]) -> Result<ScalingCurve> {
    if paths.is_empty() {
        return Err(Error::Empty("paths"));
    }
    check_grid(t_grid, paths.iter().map(|p| p.n_steps()).min().unwrap())?;
    let per_path: Vec<Vec<(f64, f64)>> = paths.par_iter().map(|p| sample_on_grid(p, t_grid)).collect();
    Ok(average_curve(&per_path, t_grid))
}

/// Same curve over the pair trajectories of `panel` columns. Trajectories
/// are built one at a time.
pub fn pair_rg_curve(panel: &PricePanel, pairs: &[(usize, usize)], t_grid: &[usize]) -> Result<ScalingCurve> {
    if pairs.is_empty() {
        return Err(Error::Empty("asset pairs"));
    }
    if let Some(&(i, j)) = pairs.iter().find(|(i, j)| i.max(j) >= &panel.n_assets()) {
        return Err(Error::InvalidParameter(format!("pair ({i}, {j}) out of range for {} assets", panel.n_assets())));
    }
    check_grid(t_grid, panel.n_times().saturating_sub(1))?;
    let per_pair: Vec<Vec<(f64, f64)>> = pairs
        .par_iter()
        .map(|&(i, j)| pair_stock_trajectory(&panel.column(i), &panel.column(j)).map(|p| sample_on_grid(&p, t_grid)))
        .collect::<Result<_>>()?;
    Ok(average_curve(&per_pair, t_grid))
}

/// `d_f = 1 / slope` of `ln R_g` against `ln l`, after dropping the first
/// [`TRANSIENT_FRACTION`] of the curve points.
pub fn fit_fractal_dimension(curve: &ScalingCurve) -> Result<ScalarFit> {
    let skip = (curve.points.len() as f64 * TRANSIENT_FRACTION).floor() as usize;
    let pts: Vec<&CurvePoint> = curve.points[skip..].iter().filter(|p| p.ell > 0.0 && p.rg > 0.0).collect();
    if pts.len() < 10 {
        return Err(Error::InsufficientData(format!("need >= 10 curve points, have {}", pts.len())));
    }
    let lo = pts.iter().map(|p| p.ell).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.ell).fold(0.0, f64::max);
    if hi / lo < 10.0 * (1.0 - 1e-9) {
        return Err(Error::InsufficientData(format!("curve spans {:.3} decades in l, need >= 1", (hi / lo).log10())));
    }
    let x: Vec<f64> = pts.iter().map(|p| p.ell.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.rg.ln()).collect();
    let fit = ols(&x, &y)?;
    let value = 1.0 / fit.slope;
    Ok(ScalarFit { value, stderr: fit.slope_stderr / (fit.slope * fit.slope), range: (lo, hi) })
}
