//! End-to-end analysis runs.
//!
//! [`run`] executes the requested analyses in dependency order and writes
//! every artifact under `output_dir`:
//!
//! | file | content |
//! |------|---------|
//! | `report.json` | [`AnalysisReport`] |
//! | `MANIFEST.txt` | completed stages and the files each produced |
//! | `error.json` | [`ErrorRecord`], only when a stage fails |
//! | `prices.csv` | first price panel (wide CSV) |
//! | `geometry_curve.csv` | `t, ell, rg` |
//! | `psd.csv` | `freq, power` |
//! | `returns_abs_hist.csv` | log-binned histogram of absolute normalized returns |
//! | `elements_hist_T###.csv`, `eigen_hist_T###.csv` | log-binned histograms per epoch length |
//! | `spectra_T###.csv` | every spectrum of the first panel |
//! | `lambda_max_T###.csv` | largest-eigenvalue samples behind each GEV fit |
//! | `lambda_max_curve.csv`, `lambda_max_rescaled.csv`, `shuffle_curve.csv` | `<lambda_max>(Q)` curves |
//! | `tw_rescaled.csv` | rescaled shuffled maxima compared with the TW1 reference |
//!
//! All randomness derives from `config.seed`: panel `k` uses
//! `child_seed(labelled_seed(seed, "walk"), k)`, the shuffles at epoch
//! length `T` use `child_seed(labelled_seed(seed, "shuffle"), T)` and the
//! TW1 reference uses `labelled_seed(seed, "tw")` unless set explicitly.

mod compare;
mod config;
mod report;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

pub use compare::{compare, compare_files, Comparison, MetricDiff};
pub use config::{default_t_grid, Analysis, RunConfig, Source, TwSettings};
pub use report::*;

use crate::error::{Error, Result};
use crate::evt::{
    curve_from_samples, gev_fit, lambda_max_samples, load_or_build_reference, rescale_curve, rescale_to_tw,
    shuffled_lambda_max_samples, CurveSource,
};
use crate::geometry::{asset_pairs, fit_fractal_dimension, log_time_grid, pair_rg_curve, rg_vs_length_curve};
use crate::ingest::{self, CleaningReport, CsvArtifact, Format};
use crate::levy_walk::{generate_paths, panel_from_paths, SeriesKind, WalkConfig, WalkPath2D};
use crate::returns::{epoch_matrices, log_returns, normalize_cross_section, PricePanel, ReturnPanel};
use crate::rng::{child_seed, labelled_seed};
use crate::spectra::{collect_element_samples, eigenvalues, mp_edge, nonzero_spectrum, wishart, Spectrum};
use crate::statfit::{
    default_band, fit_spectral_exponent, hill_tail_exponent, log_binned_histogram, periodogram_panel,
    powerlaw_fit_ks, spearman, student_t_fit, tail_model_comparison, DEFAULT_TAIL_FRACTION,
};

const MIN_GEV_MAXIMA: usize = 100;
const MIN_COMPARISON_SAMPLES: usize = 1000;

/// A failed run: the stage that failed and why.
#[derive(Debug, thiserror::Error)]
#[error("stage `{stage}` failed: {source}")]
pub struct RunError {
    pub stage: String,
    #[source]
    pub source: Error,
}

impl RunError {
    /// Whether the failure came from configuration checks rather than from an analysis.
    pub fn is_validation(&self) -> bool {
        self.stage == "config"
    }
}

pub fn derive_seeds(config: &RunConfig) -> SeedRecord {
    let walk = labelled_seed(config.seed, "walk");
    let panels = if config.source.is_simulated() {
        (0..config.n_panels).map(|k| child_seed(walk, k as u64)).collect()
    } else {
        Vec::new()
    };
    SeedRecord {
        seed: config.seed,
        panels,
        shuffle: labelled_seed(config.seed, "shuffle"),
        tw: config.tw.seed.unwrap_or_else(|| labelled_seed(config.seed, "tw")),
    }
}

struct Inputs {
    panels: Vec<PricePanel>,
    returns: Vec<ReturnPanel>,
    /// Walks behind the first panel, kept only for the geometry analysis.
    paths: Option<Vec<WalkPath2D>>,
    cleaning: Option<CleaningReport>,
}

struct Runner<'a> {
    config: &'a RunConfig,
    dir: PathBuf,
    completed: Vec<(String, Vec<String>)>,
    files: Vec<String>,
}

impl<'a> Runner<'a> {
    fn write<A: CsvArtifact + Serialize + ?Sized>(&mut self, name: String, artifact: &A) -> Result<()> {
        ingest::export(artifact, self.dir.join(&name), Format::Csv)?;
        self.files.push(name);
        Ok(())
    }

    fn write_rows<R: Serialize>(&mut self, name: String, rows: impl IntoIterator<Item = R>) -> Result<()> {
        let path = self.dir.join(&name);
        let mut w = csv::Writer::from_path(&path)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.files.push(name);
        Ok(())
    }

    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> std::result::Result<T, RunError> {
        log::info!("stage {name}");
        self.files.clear();
        match f(self) {
            Ok(v) => {
                let files = std::mem::take(&mut self.files);
                self.completed.push((name.to_string(), files));
                Ok(v)
            }
            Err(source) => {
                let record = ErrorRecord {
                    stage: name.to_string(),
                    message: source.to_string(),
                    completed_stages: self.completed.iter().map(|(s, _)| s.clone()).collect(),
                };
                if let Err(e) = ingest::write_json(&record, self.dir.join("error.json")) {
                    log::error!("could not write error record: {e}");
                }
                if let Err(e) = self.write_manifest(Some(name)) {
                    log::error!("could not write manifest: {e}");
                }
                Err(RunError { stage: name.to_string(), source })
            }
        }
    }

    fn write_manifest(&self, failed: Option<&str>) -> Result<()> {
        let mut text = String::from("# levymarket run manifest\n");
        for (stage, files) in &self.completed {
            text.push_str(&format!("completed {stage}"));
            for f in files {
                text.push(' ');
                text.push_str(f);
            }
            text.push('\n');
        }
        if let Some(stage) = failed {
            text.push_str(&format!("failed {stage} error.json\n"));
        }
        let path = self.dir.join("MANIFEST.txt");
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

fn curve_source(source: &Source) -> CurveSource {
    match source {
        Source::SimulateR => CurveSource::ModelR,
        Source::SimulateL => CurveSource::ModelL,
        Source::Empirical(_) => CurveSource::Empirical,
    }
}

fn t_file(prefix: &str, t: usize) -> String {
    format!("{prefix}_T{t:03}.csv")
}

fn load_inputs(config: &RunConfig, seeds: &SeedRecord) -> Result<Inputs> {
    let (panels, paths, cleaning) = match &config.source {
        Source::Empirical(path) => {
            let (panel, report) = ingest::read_price_panel(path, &config.cleaning)?;
            for d in &report.dropped {
                log::warn!("dropped {}: {}", d.label, d.reason);
            }
            if config.n_panels > 1 {
                log::warn!("empirical runs use a single panel; ignoring n_panels = {}", config.n_panels);
            }
            (vec![panel], None, Some(report))
        }
        source => {
            let kind = match source {
                Source::SimulateR => SeriesKind::DistanceFromOrigin,
                _ => SeriesKind::CumulativeLength,
            };
            let mut panels = Vec::with_capacity(seeds.panels.len());
            let mut first_paths = None;
            for (k, &seed) in seeds.panels.iter().enumerate() {
                let walk = WalkConfig::new(config.alpha, 1.0, config.n_steps, seed)?;
                let paths = generate_paths(&walk, config.n_walkers)?;
                panels.push(panel_from_paths(&paths, kind)?);
                if k == 0 && config.wants(Analysis::Geometry) {
                    first_paths = Some(paths);
                }
            }
            (panels, first_paths, None)
        }
    };
    let returns = panels
        .iter()
        .map(|p| log_returns(p).and_then(|r| normalize_cross_section(&r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Inputs { panels, returns, paths, cleaning })
}

/// Execute the configured analyses and write all artifacts. On failure an
/// `error.json` record and a `MANIFEST.txt` of completed stages are left in
/// `output_dir`.
pub fn run(config: &RunConfig) -> std::result::Result<AnalysisReport, RunError> {
    config.validate().map_err(|source| RunError { stage: "config".into(), source })?;
    fs::create_dir_all(&config.output_dir)
        .map_err(|e| RunError { stage: "output".into(), source: Error::io(&config.output_dir, e) })?;
    let seeds = derive_seeds(config);
    let mut r = Runner { config, dir: config.output_dir.clone(), completed: Vec::new(), files: Vec::new() };

    let inputs = r.stage("load", |r| {
        let inputs = load_inputs(r.config, &seeds)?;
        r.write("prices.csv".into(), &inputs.panels[0])?;
        Ok(inputs)
    })?;
    let first = &inputs.panels[0];
    let n = first.n_assets();
    let data = DataSummary {
        labels: first.labels.clone(),
        n_assets: n,
        n_prices: first.n_times(),
        n_returns: inputs.returns[0].n_rows(),
        n_panels: inputs.panels.len(),
    };

    let geometry = if config.wants(Analysis::Geometry) {
        Some(r.stage("geometry", |r| geometry_stage(r, &inputs))?)
    } else {
        None
    };
    let psd = if config.wants(Analysis::Psd) {
        Some(r.stage("psd", |r| {
            let raw = periodogram_panel(first)?;
            let est = fit_spectral_exponent(&raw, default_band(&raw))?;
            r.write("psd.csv".into(), &est)?;
            Ok(PsdReport {
                beta: est.beta.unwrap_or(f64::NAN),
                beta_stderr: est.beta_stderr.unwrap_or(f64::NAN),
                band: est.band.unwrap_or_default(),
                n_series: est.n_series,
                length: est.length,
            })
        })?)
    } else {
        None
    };
    let returns_dist = if config.wants(Analysis::ReturnsDist) {
        Some(r.stage("returns_dist", |r| {
            let xs: Vec<f64> = inputs.returns[0].values.iter().copied().collect();
            let t_fit = student_t_fit(&xs)?;
            let abs: Vec<f64> = xs.iter().map(|x| x.abs()).filter(|&x| x > 0.0).collect();
            r.write("returns_abs_hist.csv".into(), &log_binned_histogram(&abs, r.config.bins_per_decade)?)?;
            Ok(ReturnsReport { t_fit, n_samples: xs.len() })
        })?)
    } else {
        None
    };
    let (elements, spectra) = if config.wants(Analysis::Elements) || config.wants(Analysis::Spectra) {
        r.stage("tails", |r| tail_stage(r, &inputs.returns[0]))?
    } else {
        (None, None)
    };
    let evt = if config.wants(Analysis::Evt) {
        Some(r.stage("evt", |r| evt_stage(r, &inputs.returns))?)
    } else {
        None
    };
    let shuffle = if config.wants(Analysis::Shuffle) {
        Some(r.stage("shuffle", |r| shuffle_stage(r, &inputs.returns, &seeds))?)
    } else {
        None
    };

    let report = AnalysisReport {
        format_version: REPORT_FORMAT_VERSION,
        config: config.clone(),
        seeds,
        data,
        cleaning: inputs.cleaning.clone(),
        geometry,
        psd,
        returns_dist,
        elements,
        spectra,
        evt,
        shuffle,
    };
    r.stage("report", |r| {
        ingest::write_json(&report, r.dir.join("report.json"))?;
        r.files.push("report.json".into());
        Ok(())
    })?;
    r.write_manifest(None).map_err(|source| RunError { stage: "manifest".into(), source })?;
    Ok(report)
}

fn geometry_stage(r: &mut Runner, inputs: &Inputs) -> Result<GeometryReport> {
    let cfg = r.config;
    let (curve, trajectories, n_trajectories, subsampled, step_tail) = match &inputs.paths {
        Some(paths) => {
            let grid = log_time_grid(cfg.n_steps, cfg.geometry_points);
            let curve = rg_vs_length_curve(paths, &grid)?;
            let steps: Vec<f64> = paths.iter().flat_map(|p| p.step_lengths.iter().copied()).collect();
            let step_tail = hill_tail_exponent(&steps, DEFAULT_TAIL_FRACTION)?;
            (curve, "walks", paths.len(), false, Some(step_tail))
        }
        None => {
            let panel = &inputs.panels[0];
            let n = panel.n_assets();
            let pairs = asset_pairs(n, cfg.max_pairs);
            let subsampled = pairs.len() < n * (n - 1) / 2;
            let grid = log_time_grid(panel.n_times() - 1, cfg.geometry_points);
            (pair_rg_curve(panel, &pairs, &grid)?, "asset_pairs", pairs.len(), subsampled, None)
        }
    };
    r.write("geometry_curve.csv".into(), &curve)?;
    Ok(GeometryReport {
        fractal_dimension: fit_fractal_dimension(&curve)?,
        trajectories: trajectories.into(),
        n_trajectories,
        subsampled,
        step_tail,
    })
}

fn trend(points: &[TailPoint]) -> Option<Trend> {
    if points.len() < 3 {
        return None;
    }
    let q: Vec<f64> = points.iter().map(|p| p.q).collect();
    let e: Vec<f64> = points.iter().map(|p| p.ks_fit.exponent).collect();
    let (rho, p_value) = spearman(&q, &e);
    Some(Trend { rho, p_value })
}

/// Element and eigenvalue tails over disjoint epochs of the first panel.
fn tail_stage(r: &mut Runner, returns: &ReturnPanel) -> Result<(Option<TailScan>, Option<TailScan>)> {
    let cfg = r.config;
    let (want_el, want_sp) = (cfg.wants(Analysis::Elements), cfg.wants(Analysis::Spectra));
    let n = returns.n_assets();
    let (mut el_points, mut sp_points) = (Vec::new(), Vec::new());
    for &t in &cfg.t_grid {
        let epochs = epoch_matrices(returns, t, false)?;
        let q = t as f64 / n as f64;
        let per_epoch: Vec<(Vec<f64>, Option<Spectrum>)> = epochs
            .par_iter()
            .map(|e| {
                let w = wishart(e);
                let elements = if want_el {
                    collect_element_samples(std::slice::from_ref(&w))?.into_iter().map(f64::abs).collect()
                } else {
                    Vec::new()
                };
                let spectrum = if want_sp { Some(eigenvalues(&w)?) } else { None };
                Ok((elements, spectrum))
            })
            .collect::<Result<_>>()?;
        let (element_parts, spectra): (Vec<Vec<f64>>, Vec<Option<Spectrum>>) = per_epoch.into_iter().unzip();

        if want_el {
            let mut samples = Vec::with_capacity(element_parts.iter().map(Vec::len).sum());
            for part in element_parts {
                samples.extend(part.into_iter().filter(|&v| v > 0.0));
            }
            r.write(t_file("elements_hist", t), &log_binned_histogram(&samples, cfg.bins_per_decade)?)?;
            el_points.push(TailPoint {
                t,
                q,
                n_epochs: epochs.len(),
                n_samples: samples.len(),
                ks_fit: powerlaw_fit_ks(&samples)?,
                hill: hill_tail_exponent(&samples, DEFAULT_TAIL_FRACTION)?,
                comparison: None,
            });
        }
        if want_sp {
            let spectra: Vec<Spectrum> = spectra.into_iter().flatten().collect();
            let mut pooled = Vec::with_capacity(spectra.len() * t.min(n));
            for s in &spectra {
                pooled.extend(nonzero_spectrum(s)?);
            }
            r.write(t_file("spectra", t), &spectra)?;
            r.write(t_file("eigen_hist", t), &log_binned_histogram(&pooled, cfg.bins_per_decade)?)?;
            let comparison = if pooled.len() >= MIN_COMPARISON_SAMPLES {
                Some(tail_model_comparison(&pooled)?)
            } else {
                None
            };
            sp_points.push(TailPoint {
                t,
                q,
                n_epochs: spectra.len(),
                n_samples: pooled.len(),
                ks_fit: powerlaw_fit_ks(&pooled)?,
                hill: hill_tail_exponent(&pooled, DEFAULT_TAIL_FRACTION)?,
                comparison,
            });
        }
    }
    let scan = |points: Vec<TailPoint>| TailScan { trend: trend(&points), points };
    Ok((want_el.then(|| scan(el_points)), want_sp.then(|| scan(sp_points))))
}

#[derive(Serialize)]
struct SampleRow {
    lambda_max: f64,
}

fn evt_stage(r: &mut Runner, returns: &[ReturnPanel]) -> Result<EvtReport> {
    let cfg = r.config;
    let overlap = cfg.overlap();
    let n = returns[0].n_assets();
    let mut grid_samples = Vec::with_capacity(cfg.t_grid.len());
    for &t in &cfg.t_grid {
        grid_samples.push((t, lambda_max_samples(returns, t, overlap)?));
    }
    let curve = curve_from_samples(&grid_samples, n, curve_source(&cfg.source));
    let rescaled = rescale_curve(&curve, cfg.rescale_exponent);
    r.write("lambda_max_curve.csv".into(), &curve)?;
    r.write("lambda_max_rescaled.csv".into(), &rescaled)?;

    let mut fits = Vec::with_capacity(cfg.evt_t.len());
    for &t in &cfg.evt_t {
        let samples = match grid_samples.iter().find(|(gt, _)| *gt == t) {
            Some((_, s)) => s.clone(),
            None => lambda_max_samples(returns, t, overlap)?,
        };
        r.write_rows(t_file("lambda_max", t), samples.iter().map(|&lambda_max| SampleRow { lambda_max }))?;
        let q = t as f64 / n as f64;
        let entry = if samples.len() < MIN_GEV_MAXIMA {
            EvtEntry {
                t,
                q,
                n_maxima: samples.len(),
                fit: None,
                note: Some(format!("{} maxima, need >= {MIN_GEV_MAXIMA}", samples.len())),
            }
        } else {
            EvtEntry { t, q, n_maxima: samples.len(), fit: Some(gev_fit(&samples)?), note: None }
        };
        fits.push(entry);
    }
    Ok(EvtReport { overlap, curve, rescaled, fits })
}

#[derive(Serialize)]
struct RescaledRow {
    rescaled: f64,
}

fn shuffle_stage(r: &mut Runner, returns: &[ReturnPanel], seeds: &SeedRecord) -> Result<ShuffleReport> {
    let cfg = r.config;
    let n = returns[0].n_assets();
    let mut grid_samples = Vec::with_capacity(cfg.t_grid.len());
    for &t in &cfg.t_grid {
        grid_samples.push((t, shuffled_lambda_max_samples(returns, t, child_seed(seeds.shuffle, t as u64))?));
    }
    let curve = curve_from_samples(&grid_samples, n, CurveSource::Shuffled);
    r.write("shuffle_curve.csv".into(), &curve)?;
    let edge_ratio = curve.points.iter().map(|p| p.mean / mp_edge(p.q, 1.0)).collect();

    let tw = match grid_samples.iter().filter(|(t, _)| *t <= n).max_by_key(|(t, _)| *t) {
        Some((t, samples)) => {
            let rescaled = rescale_to_tw(samples, *t, n)?;
            let s = &cfg.tw;
            let reference = load_or_build_reference(s.cache_dir.as_deref(), s.n_matrices, s.matrix_size, seeds.tw, s.budget)?;
            r.write_rows("tw_rescaled.csv".into(), rescaled.iter().map(|&rescaled| RescaledRow { rescaled }))?;
            Some(TwCheck {
                t: *t,
                q: *t as f64 / n as f64,
                n_epochs: samples.len(),
                ks: reference.ks_distance(&rescaled),
                rescaled_mean: rescaled.iter().sum::<f64>() / rescaled.len() as f64,
                reference_mean: reference.mean(),
                reference_matrices: reference.n_matrices,
                reference_size: reference.matrix_size,
            })
        }
        None => None,
    };
    Ok(ShuffleReport { curve, edge_ratio, tw })
}

/// Read a report written by [`run`].
pub fn read_report(path: impl AsRef<Path>) -> Result<AnalysisReport> {
    ingest::read_json(path)
}
