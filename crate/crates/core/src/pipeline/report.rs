use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::evt::{EvtFit, LambdaMaxCurve};
use crate::geometry::ScalarFit;
use crate::ingest::CleaningReport;
use crate::statfit::{TDistFit, TailComparison, TailFit};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Every seed used by a run, derived from `config.seed`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    /// One walker-ensemble seed per panel; empty for empirical runs.
    pub panels: Vec<u64>,
    pub shuffle: u64,
    pub tw: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub labels: Vec<String>,
    pub n_assets: usize,
    pub n_prices: usize,
    pub n_returns: usize,
    pub n_panels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub fractal_dimension: ScalarFit,
    /// `"walks"` for simulated ensembles, `"asset_pairs"` for price panels.
    pub trajectories: String,
    pub n_trajectories: usize,
    /// True when fewer than all asset pairs were used.
    pub subsampled: bool,
    /// Hill fit of the walk step lengths; simulated sources only.
    pub step_tail: Option<TailFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdReport {
    pub beta: f64,
    pub beta_stderr: f64,
    pub band: (f64, f64),
    pub n_series: usize,
    pub length: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnsReport {
    pub t_fit: TDistFit,
    pub n_samples: usize,
}

/// Tail fits of one pooled sample at one epoch length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub t: usize,
    pub q: f64,
    pub n_epochs: usize,
    pub n_samples: usize,
    /// KS-scan maximum-likelihood fit; its exponent is the reported value.
    pub ks_fit: TailFit,
    pub hill: TailFit,
    /// Power law against exponential above the KS cutoff; eigenvalues only.
    pub comparison: Option<TailComparison>,
}

/// Spearman rank correlation of the exponent with `Q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub rho: f64,
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailScan {
    pub points: Vec<TailPoint>,
    pub trend: Option<Trend>,
}

impl TailScan {
    pub fn point_at_t(&self, t: usize) -> Option<&TailPoint> {
        self.points.iter().find(|p| p.t == t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvtEntry {
    pub t: usize,
    pub q: f64,
    pub n_maxima: usize,
    pub fit: Option<EvtFit>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvtReport {
    pub overlap: bool,
    pub curve: LambdaMaxCurve,
    pub rescaled: LambdaMaxCurve,
    pub fits: Vec<EvtEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwCheck {
    pub t: usize,
    pub q: f64,
    pub n_epochs: usize,
    pub ks: f64,
    pub rescaled_mean: f64,
    pub reference_mean: f64,
    pub reference_matrices: usize,
    pub reference_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShuffleReport {
    pub curve: LambdaMaxCurve,
    /// `<lambda_max> / mp_edge(Q, 1)` for each curve point.
    pub edge_ratio: Vec<f64>,
    pub tw: Option<TwCheck>,
}

/// Machine-readable summary of one run. Every field is always present;
/// analyses that were not requested are `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub format_version: u32,
    pub config: RunConfig,
    pub seeds: SeedRecord,
    pub data: DataSummary,
    pub cleaning: Option<CleaningReport>,
    pub geometry: Option<GeometryReport>,
    pub psd: Option<PsdReport>,
    pub returns_dist: Option<ReturnsReport>,
    pub elements: Option<TailScan>,
    pub spectra: Option<TailScan>,
    pub evt: Option<EvtReport>,
    pub shuffle: Option<ShuffleReport>,
}

/// Written as `error.json` when a stage fails.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub stage: String,
    pub message: String,
    pub completed_stages: Vec<String>,
}
