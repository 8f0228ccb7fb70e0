use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evt::{DEFAULT_RESCALE_EXPONENT, DEFAULT_TW_BUDGET};
use crate::ingest::CleaningPolicy;

/// Where the price panel comes from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Distance from the origin of each walker.
    SimulateR,
    /// Cumulative path length of each walker.
    SimulateL,
    /// Wide price CSV on disk.
    Empirical(PathBuf),
}

impl Source {
    pub fn is_simulated(&self) -> bool {
        !matches!(self, Source::Empirical(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Geometry,
    Psd,
    ReturnsDist,
    Elements,
    Spectra,
    Evt,
    Shuffle,
}

impl Analysis {
    pub const ALL: [Analysis; 7] = [
        Analysis::Geometry,
        Analysis::Psd,
        Analysis::ReturnsDist,
        Analysis::Elements,
        Analysis::Spectra,
        Analysis::Evt,
        Analysis::Shuffle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Analysis::Geometry => "geometry",
            Analysis::Psd => "psd",
            Analysis::ReturnsDist => "returns_dist",
            Analysis::Elements => "elements",
            Analysis::Spectra => "spectra",
            Analysis::Evt => "evt",
            Analysis::Shuffle => "shuffle",
        }
    }
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Analysis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().replace('-', "_");
        Analysis::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown analysis {s:?}")))
    }
}

/// Settings for the Monte Carlo Tracy–Widom reference used by the shuffle control.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwSettings {
    pub n_matrices: usize,
    pub matrix_size: usize,
    pub budget: u64,
    /// Derived from the run seed when unset.
    pub seed: Option<u64>,
    #[serde(skip_serializing)]
    pub cache_dir: Option<PathBuf>,
}

impl Default for TwSettings {
    fn default() -> Self {
        Self { n_matrices: 5000, matrix_size: 500, budget: DEFAULT_TW_BUDGET, seed: None, cache_dir: None }
    }
}

pub fn default_t_grid() -> Vec<usize> {
    (1..=26).map(|k| 10 * k).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub source: Source,
    pub alpha: f64,
    pub n_steps: usize,
    pub n_walkers: usize,
    /// Independent walker ensembles pooled for the largest-eigenvalue
    /// statistics. Tail fits use the first one. Empirical runs have one.
    pub n_panels: usize,
    /// Epoch lengths `T`; `Q = T / N`.
    pub t_grid: Vec<usize>,
    /// Epoch lengths at which the largest eigenvalues get a GEV fit.
    pub evt_t: Vec<usize>,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
    pub analyses: BTreeSet<Analysis>,
    /// Overlapping epochs for the largest-eigenvalue statistics; by
    /// default on for empirical data and off for simulations.
    pub overlap: Option<bool>,
    pub cleaning: CleaningPolicy,
    /// Cap on asset pairs for empirical geometry; all pairs when unset.
    pub max_pairs: Option<usize>,
    pub geometry_points: usize,
    pub bins_per_decade: usize,
    pub rescale_exponent: f64,
    pub tw: TwSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            source: Source::SimulateR,
            alpha: 1.5,
            n_steps: 7740,
            n_walkers: 262,
            n_panels: 4,
            t_grid: default_t_grid(),
            evt_t: vec![10, 100, 260],
            seed: 1,
            output_dir: PathBuf::from("levymarket-out"),
            analyses: Analysis::ALL.into_iter().collect(),
            overlap: None,
            cleaning: CleaningPolicy::default(),
            max_pairs: None,
            geometry_points: crate::geometry::DEFAULT_GRID_POINTS,
            bins_per_decade: 10,
            rescale_exponent: DEFAULT_RESCALE_EXPONENT,
            tw: TwSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn wants(&self, a: Analysis) -> bool {
        self.analyses.contains(&a)
    }

    pub fn overlap(&self) -> bool {
        self.overlap.unwrap_or(!self.source.is_simulated())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.analyses.is_empty() {
            return bad("at least one analysis must be selected".into());
        }
        match &self.source {
            Source::Empirical(path) => {
                if !path.is_file() {
                    return Err(Error::MissingInput(path.clone()));
                }
            }
            _ => {
                if !(self.alpha > 0.0 && self.alpha < 2.0) {
                    return bad(format!("alpha must be in (0, 2), got {}", self.alpha));
                }
                if self.n_steps < 2 {
                    return bad(format!("n_steps must be >= 2, got {}", self.n_steps));
                }
                if self.n_walkers < 2 {
                    return bad(format!("n_walkers must be >= 2, got {}", self.n_walkers));
                }
                if self.n_panels == 0 {
                    return bad("n_panels must be >= 1".into());
                }
            }
        }
        if self.t_grid.is_empty() {
            return bad("t_grid must not be empty".into());
        }
        if let Some(t) = self.t_grid.iter().chain(&self.evt_t).find(|&&t| t < 2) {
            return bad(format!("epoch lengths must be >= 2, got {t}"));
        }
        if self.bins_per_decade < 2 {
            return bad(format!("bins_per_decade must be >= 2, got {}", self.bins_per_decade));
        }
        if self.geometry_points < 10 {
            return bad(format!("geometry_points must be >= 10, got {}", self.geometry_points));
        }
        if !(0.0..1.0).contains(&self.cleaning.max_missing_fraction) {
            return bad(format!("max_missing_fraction must be in [0, 1), got {}", self.cleaning.max_missing_fraction));
        }
        if !self.rescale_exponent.is_finite() {
            return bad("rescale_exponent must be finite".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.t_grid.first(), Some(&10));
        assert_eq!(c.t_grid.last(), Some(&260));
        assert_eq!(c.t_grid.len(), 26);
        assert!(!c.overlap());
    }

    #[test]
    fn analysis_names_round_trip() {
        for a in Analysis::ALL {
            assert_eq!(a.name().parse::<Analysis>().unwrap(), a);
        }
        assert_eq!("returns-dist".parse::<Analysis>().unwrap(), Analysis::ReturnsDist);
        assert!("nope".parse::<Analysis>().is_err());
    }

    #[test]
    fn invalid_configs() {
        let c = RunConfig { analyses: BTreeSet::new(), ..Default::default() };
        assert!(c.validate().is_err());
        let c = RunConfig { alpha: 2.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = RunConfig { t_grid: vec![], ..Default::default() };
        assert!(c.validate().is_err());
        let c = RunConfig { source: Source::Empirical("/definitely/not/here.csv".into()), ..Default::default() };
        match c.validate() {
            Err(Error::MissingInput(p)) => assert_eq!(p, PathBuf::from("/definitely/not/here.csv")),
            other => panic!("{other:?}"),
        }
        let c = RunConfig { source: Source::Empirical("/".into()), ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn empirical_defaults_to_overlap() {
        let c = RunConfig { source: Source::Empirical("x.csv".into()), ..Default::default() };
        assert!(c.overlap());
        let c = RunConfig { overlap: Some(false), ..c };
        assert!(!c.overlap());
    }
}
