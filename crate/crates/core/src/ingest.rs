//! Wide-CSV price loading, cleaning, and CSV/JSON export of analysis artifacts.
//!
//! Wide CSV layout: header `date,TICKER1,TICKER2,...`, one row per trading
//! day, ISO-8601 dates (plain integer day indices are accepted for simulated
//! panels), decimal prices, empty cells for missing values.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evt::{CurveSource, EvtFit, LambdaMaxCurve, LambdaMaxPoint};
use crate::geometry::{CurvePoint, ScalingCurve};
use crate::returns::{PricePanel, ReturnPanel, TimeKey};
use crate::spectra::Spectrum;
use crate::statfit::{Histogram, PsdEstimate, TailFit};

/// Panel as read from disk; `None` marks a missing cell.
#[derive(Clone, Debug, PartialEq)]
pub struct RawPanel {
    pub path: PathBuf,
    pub labels: Vec<String>,
    pub times: Vec<TimeKey>,
    pub rows: Vec<Vec<Option<f64>>>,
}

pub fn load_price_csv(path: impl AsRef<Path>) -> Result<RawPanel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(file);
    let parse = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };

    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r?,
        None => return Err(parse(1, "empty file".into())),
    };
    if header.len() < 2 {
        return Err(parse(1, "header needs a date column and at least one ticker".into()));
    }
    let labels: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut seen = HashSet::new();
    for l in &labels {
        if l.is_empty() {
            return Err(parse(1, "empty ticker name".into()));
        }
        if !seen.insert(l.as_str()) {
            return Err(parse(1, format!("duplicate ticker {l:?}")));
        }
    }

    let mut times: Vec<TimeKey> = Vec::new();
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if rec.len() != labels.len() + 1 {
            return Err(parse(line, format!("expected {} fields, found {}", labels.len() + 1, rec.len())));
        }
        let key = TimeKey::parse(&rec[0]).ok_or_else(|| parse(line, format!("bad date {:?}", &rec[0])))?;
        if let Some(prev) = times.last() {
            if key == *prev {
                return Err(parse(line, format!("duplicate date {key}")));
            }
            if key < *prev {
                return Err(parse(line, format!("date {key} is earlier than {prev}")));
            }
        }
        let mut row = Vec::with_capacity(labels.len());
        for cell in rec.iter().skip(1) {
            let cell = cell.trim();
            if cell.is_empty() {
                row.push(None);
            } else {
                let v: f64 = cell.parse().map_err(|_| parse(line, format!("bad number {cell:?}")))?;
                if !v.is_finite() {
                    return Err(parse(line, format!("non-finite number {cell:?}")));
                }
                row.push(Some(v));
            }
        }
        times.push(key);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse(2, "no data rows".into()));
    }
    Ok(RawPanel { path: path.to_path_buf(), labels, times, rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CleaningPolicy {
    pub max_missing_fraction: f64,
    /// Drop assets with any non-positive price; otherwise such cells are
    /// treated as missing.
    pub drop_nonpositive: bool,
}

impl Default for CleaningPolicy {
    fn default() -> Self {
        Self { max_missing_fraction: 0.02, drop_nonpositive: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedAsset {
    pub label: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilledCell {
    pub label: String,
    pub time: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub dropped: Vec<DroppedAsset>,
    pub filled: Vec<FilledCell>,
}

impl CleaningReport {
    pub fn is_empty(&self) -> bool {
        self.dropped.is_empty() && self.filled.is_empty()
    }
}

/// Drop assets with too many gaps, non-positive prices or a missing first
/// value; forward-fill the remaining gaps.
pub fn clean_panel(raw: &RawPanel, policy: &CleaningPolicy) -> Result<(PricePanel, CleaningReport)> {
    if !(0.0..1.0).contains(&policy.max_missing_fraction) {
        return Err(Error::InvalidParameter(format!(
            "max_missing_fraction must be in [0, 1), got {}",
            policy.max_missing_fraction
        )));
    }
    let t_total = raw.rows.len();
    let mut report = CleaningReport::default();
    let mut keep: Vec<(usize, Vec<f64>)> = Vec::new();
    for (i, label) in raw.labels.iter().enumerate() {
        let mut col: Vec<Option<f64>> = raw.rows.iter().map(|r| r[i]).collect();
        let has_nonpositive = col.iter().flatten().any(|&v| v <= 0.0);
        if has_nonpositive {
            if policy.drop_nonpositive {
                report.dropped.push(DroppedAsset { label: label.clone(), reason: "non-positive price".into() });
                continue;
            }
            col.iter_mut().for_each(|c| {
                if matches!(c, Some(v) if *v <= 0.0) {
                    *c = None;
                }
            });
        }
        let missing = col.iter().filter(|c| c.is_none()).count();
        let frac = missing as f64 / t_total as f64;
        if frac > policy.max_missing_fraction {
            report.dropped.push(DroppedAsset {
                label: label.clone(),
                reason: format!("missing fraction {frac:.4} exceeds {}", policy.max_missing_fraction),
            });
            continue;
        }
        if col[0].is_none() {
            report.dropped.push(DroppedAsset { label: label.clone(), reason: "leading gap cannot be forward-filled".into() });
            continue;
        }
        let mut last = 0.0;
        let mut filled = Vec::with_capacity(t_total);
        for (t, c) in col.iter().enumerate() {
            match c {
                Some(v) => last = *v,
                None => {
                    log::debug!("forward-filling {label} at {}", raw.times[t]);
                    report.filled.push(FilledCell { label: label.clone(), time: raw.times[t].to_string() });
                }
            }
            filled.push(last);
        }
        keep.push((i, filled));
    }
    if keep.is_empty() {
        return Err(Error::AllAssetsDropped);
    }
    let values = DMatrix::from_fn(t_total, keep.len(), |t, j| keep[j].1[t]);
    let labels = keep.iter().map(|(i, _)| raw.labels[*i].clone()).collect();
    Ok((PricePanel::new(labels, raw.times.clone(), values)?, report))
}

/// Load and clean in one step.
pub fn read_price_panel(path: impl AsRef<Path>, policy: &CleaningPolicy) -> Result<(PricePanel, CleaningReport)> {
    clean_panel(&load_price_csv(path)?, policy)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Formats a float with the shortest representation that parses back to
/// the same value (at most 17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Artifacts with a CSV table form. JSON goes through serde.
pub trait CsvArtifact {
    fn write_csv<W: Write>(&self, w: W) -> Result<()>;
}

pub trait CsvImport: Sized {
    fn read_csv(path: &Path) -> Result<Self>;
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

pub fn export<A: CsvArtifact + Serialize + ?Sized>(artifact: &A, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    match format {
        Format::Csv => artifact.write_csv(&mut w)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, artifact)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Write any serializable value as pretty JSON.
pub fn write_json<T: Serialize + ?Sized>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

fn write_rows<W: Write, R: Serialize>(w: W, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))
}

fn read_rows<R: DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(file).deserialize().map(|r| r.map_err(Error::from)).collect()
}

fn write_wide<W: Write>(w: W, first: &str, labels: &[String], keys: &[String], values: &DMatrix<f64>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(std::iter::once(first).chain(labels.iter().map(String::as_str)))?;
    for (t, key) in keys.iter().enumerate() {
        let row: Vec<String> = values.row(t).iter().map(|v| fmt_f64(*v)).collect();
        wtr.write_record(std::iter::once(key.as_str()).chain(row.iter().map(String::as_str)))?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))
}

impl CsvArtifact for PricePanel {
    fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let keys: Vec<String> = self.times.iter().map(|t| t.to_string()).collect();
        write_wide(w, "date", &self.labels, &keys, &self.values)
    }
}

impl CsvImport for PricePanel {
    /// Strict import: any missing or non-positive cell is an error.
    fn read_csv(path: &Path) -> Result<Self> {
        let raw = load_price_csv(path)?;
        let strict = CleaningPolicy { max_missing_fraction: 0.0, drop_nonpositive: true };
        let (panel, report) = clean_panel(&raw, &strict)?;
        if !report.is_empty() {
            return Err(Error::InvalidParameter(format!("{} is not a complete price panel", path.display())));
        }
        Ok(panel)
    }
}

impl CsvArtifact for ReturnPanel {
    fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let keys: Vec<String> = (0..self.n_rows()).map(|t| t.to_string()).collect();
        write_wide(w, "row", &self.labels, &keys, &self.values)
    }
}

#[derive(Serialize, Deserialize)]
struct HistRow {
    edge_lo: f64,
    edge_hi: f64,
    count: u64,
    density: f64,
}

impl CsvArtifact for Histogram {
    fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(
            w,
            self.edges.windows(2).zip(self.counts.iter().zip(&self.densities)).map(|(e, (&count, &density))| HistRow {
                edge_lo: e[0],
                edge_hi: e[1],
                count,
                density,
            }),
        )
    }
}

impl CsvImport for Histogram {
    fn read_csv(path: &Path) -> Result<Self> {
        let rows: Vec<HistRow> = read_rows(path)?;
        let first = rows.first().ok_or(Error::Empty("histogram rows"))?;
        let mut edges = vec![first.edge_lo];
        edges.extend(rows.iter().map(|r| r.edge_hi));
        Ok(Histogram {
            edges,
            counts: rows.iter().map(|r| r.count).collect(),
            densities: rows.iter().map(|r| r.density).collect(),
        })
    }
}

impl CsvArtifact for ScalingCurve {
    fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(w, self.points.iter())
    }
}

impl CsvImport for ScalingCurve {
    /// `n_samples` is not part of the table and comes back as 0.
    fn read_csv(path: &Path) -> Result<Self> {
        let points: Vec<CurvePoint> = read_rows(path)?;
        Ok(ScalingCurve { points, n_samples: 0 })
    }
}

#[derive(Serialize, Deserialize)]
struct PsdRow {
    freq: f64,
    power: f64,
}

impl CsvArtifact for PsdEstimate {
    fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(w, self.freqs.iter().zip(&self.power).map(|(&freq, &power)| PsdRow { freq, power }))
    }
}

impl CsvArtifact for TailFit {
    fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(w, std::iter::once(self))
    }
}

impl CsvArtifact for EvtFit {
    fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["shape", "location", "scale", "loglik", "family", "shape_stderr", "n"])?;
        let se = self.shape_stderr.map(fmt_f64).unwrap_or_default();
        let family = serde_json::to_value(self.family)?.as_str().unwrap_or_default().to_string();
        wtr.write_record([
            fmt_f64(self.shape),
            fmt_f64(self.location),
            fmt_f64(self.scale),
            fmt_f64(self.loglik),
            family,
            se,
            self.n.to_string(),
        ])?;
        wtr.flush().map_err(|e| Error::io("<csv>", e))
    }
}

impl CsvArtifact for LambdaMaxCurve {
    fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows(w, self.points.iter())
    }
}

impl CsvImport for LambdaMaxCurve {
    /// The source tag is not part of the table; it is restored as `Empirical`.
    fn read_csv(path: &Path) -> Result<Self> {
        let points: Vec<LambdaMaxPoint> = read_rows(path)?;
        Ok(LambdaMaxCurve { points, source: CurveSource::Empirical, rescale_exponent: None })
    }
}

/// One row per spectrum: `start, T, N, Q, lambda_1, ..., lambda_N`.
impl CsvArtifact for [Spectrum] {
    fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let n = self.first().map(|s| s.n).unwrap_or(0);
        let mut header = vec!["start".to_string(), "t".into(), "n".into(), "q".into()];
        header.extend((1..=n).map(|k| format!("lambda_{k}")));
        wtr.write_record(&header)?;
        for s in self {
            let mut rec = vec![s.start.to_string(), s.t.to_string(), s.n.to_string(), fmt_f64(s.q())];
            rec.extend(s.eigenvalues.iter().map(|v| fmt_f64(*v)));
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))
    }
}

impl CsvArtifact for Vec<Spectrum> {
    fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        self.as_slice().write_csv(w)
    }
}
