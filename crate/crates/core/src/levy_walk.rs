//! Two-dimensional Lévy flights and the price processes derived from them.
//!
//! Step lengths follow the Pareto law `P(s > x) = (x / s_min)^-alpha` and
//! directions are uniform on the circle. Two price processes can be read off
//! a trajectory: the distance from the origin `r(t)` and the cumulative path
//! length `l(t)`.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::returns::{PricePanel, TimeKey};
use crate::rng::{child_seed, rng_from_seed};

/// A price series indexed by trading day.
pub type PriceSeries = Vec<f64>;

/// Relative floor applied to derived prices so that logarithms stay finite.
pub const EPSILON_PRICE_REL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub alpha: f64,
    pub s_min: f64,
    pub n_steps: usize,
    pub seed: u64,
}

impl WalkConfig {
    pub fn new(alpha: f64, s_min: f64, n_steps: usize, seed: u64) -> Result<Self> {
        let cfg = Self { alpha, s_min, n_steps, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Tail index 3/2, unit minimum step.
    pub fn standard(n_steps: usize, seed: u64) -> Self {
        Self { alpha: 1.5, s_min: 1.0, n_steps, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 2), got {}",
                self.alpha
            )));
        }
        if !(self.s_min > 0.0 && self.s_min.is_finite()) {
            return Err(Error::InvalidParameter(format!("s_min must be > 0, got {}", self.s_min)));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidParameter("n_steps must be >= 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn epsilon_price(&self) -> f64 {
        EPSILON_PRICE_REL * self.s_min
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    /// `r(t)`: Euclidean distance of the walker from the origin.
    DistanceFromOrigin,
    /// `l(t)`: total length travelled up to `t`.
    CumulativeLength,
}

impl SeriesKind {
    pub fn short_name(&self) -> &'static str {
        match self {
            SeriesKind::DistanceFromOrigin => "r",
            SeriesKind::CumulativeLength => "l",
        }
    }
}

/// One planar trajectory. `positions[0]` is the origin and
/// `step_lengths[k] == |positions[k + 1] - positions[k]|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkPath2D {
    pub positions: Vec<[f64; 2]>,
    pub step_lengths: Vec<f64>,
    pub config: WalkConfig,
}

impl WalkPath2D {
    /// Build a path from explicit displacements, starting at the origin.
    pub fn from_steps(steps: &[[f64; 2]], config: WalkConfig) -> Self {
        let mut positions = Vec::with_capacity(steps.len() + 1);
        let mut step_lengths = Vec::with_capacity(steps.len());
        let (mut x, mut y) = (0.0_f64, 0.0_f64);
        positions.push([x, y]);
        for &[dx, dy] in steps {
            x += dx;
            y += dy;
            positions.push([x, y]);
            step_lengths.push(dx.hypot(dy));
        }
        Self { positions, step_lengths, config }
    }

    pub fn n_steps(&self) -> usize {
        self.step_lengths.len()
    }

    /// Distance of `positions[t]` from the origin.
    pub fn radius(&self, t: usize) -> f64 {
        let [x, y] = self.positions[t];
        x.hypot(y)
    }

    /// Cumulative lengths `l(1), ..., l(n_steps)`.
    pub fn cumulative_lengths(&self) -> Vec<f64> {
        self.step_lengths
            .iter()
            .scan(0.0, |acc, s| {
                *acc += s;
                Some(*acc)
            })
            .collect()
    }
}

/// Draw one displacement: Pareto length by inverse transform, uniform angle.
pub fn sample_step<R: Rng + ?Sized>(rng: &mut R, alpha: f64, s_min: f64) -> [f64; 2] {
    // 1 - [0, 1) is (0, 1], so the power is always finite.
    let u: f64 = 1.0 - rng.random::<f64>();
    let s = s_min * u.powf(-1.0 / alpha);
    let theta = TAU * rng.random::<f64>();
    let (sin, cos) = theta.sin_cos();
    [s * cos, s * sin]
}

/// Pareto step length alone (same draw order as the radial part of [`sample_step`]).
pub fn sample_step_length<R: Rng + ?Sized>(rng: &mut R, alpha: f64, s_min: f64) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    s_min * u.powf(-1.0 / alpha)
}

pub fn generate_walk(config: &WalkConfig) -> Result<WalkPath2D> {
    config.validate()?;
    let mut rng = rng_from_seed(config.seed);
    let steps: Vec<[f64; 2]> = (0..config.n_steps)
        .map(|_| sample_step(&mut rng, config.alpha, config.s_min))
        .collect();
    Ok(WalkPath2D::from_steps(&steps, *config))
}

/// Price series `t = 1..=n_steps` read off a path.
pub fn derive_series(path: &WalkPath2D, kind: SeriesKind) -> PriceSeries {
    let floor = path.config.epsilon_price();
    let raw: Vec<f64> = match kind {
        SeriesKind::DistanceFromOrigin => (1..path.positions.len()).map(|t| path.radius(t)).collect(),
        SeriesKind::CumulativeLength => path.cumulative_lengths(),
    };
    raw.into_iter().map(|v| v.max(floor)).collect()
}

/// `n_steps x n_walkers` panel of independent walkers. Walker `i` is
/// seeded with `child_seed(config.seed, i)`.
pub fn generate_ensemble(config: &WalkConfig, n_walkers: usize, kind: SeriesKind) -> Result<PricePanel> {
    config.validate()?;
    if n_walkers == 0 {
        return Err(Error::InvalidParameter("n_walkers must be >= 1".into()));
    }
    let columns: Vec<PriceSeries> = (0..n_walkers)
        .into_par_iter()
        .map(|i| {
            let cfg = config.with_seed(walker_seed(config.seed, i));
            generate_walk(&cfg).map(|p| derive_series(&p, kind))
        })
        .collect::<Result<_>>()?;
    columns_to_panel(columns, kind)
}

/// Panel of the `kind` series of already generated paths, one column per path.
pub fn panel_from_paths(paths: &[WalkPath2D], kind: SeriesKind) -> Result<PricePanel> {
    if paths.is_empty() {
        return Err(Error::Empty("paths"));
    }
    let columns: Vec<PriceSeries> = paths.par_iter().map(|p| derive_series(p, kind)).collect();
    if let Some(c) = columns.iter().find(|c| c.len() != columns[0].len()) {
        return Err(Error::LengthMismatch { left: columns[0].len(), right: c.len() });
    }
    columns_to_panel(columns, kind)
}

fn columns_to_panel(columns: Vec<PriceSeries>, kind: SeriesKind) -> Result<PricePanel> {
    let (n, m) = (columns[0].len(), columns.len());
    let values = DMatrix::from_fn(n, m, |t, i| columns[i][t]);
    let labels = (0..m).map(|i| format!("{}{:04}", kind.short_name(), i)).collect();
    let times = (1..=n as i64).map(TimeKey::Index).collect();
    PricePanel::new(labels, times, values)
}

/// Paths for an ensemble, with the same per-walker seeds as [`generate_ensemble`].
pub fn generate_paths(config: &WalkConfig, n_walkers: usize) -> Result<Vec<WalkPath2D>> {
    config.validate()?;
    (0..n_walkers)
        .into_par_iter()
        .map(|i| generate_walk(&config.with_seed(walker_seed(config.seed, i))))
        .collect()
}

pub fn walker_seed(seed: u64, walker: usize) -> u64 {
    child_seed(seed, walker as u64)
}
