//! Price panels, log-returns, cross-sectional normalization and epoch slicing.

use std::fmt;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row key of a panel: a calendar date for empirical data, a plain day
/// index for simulated data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeKey {
    Index(i64),
    Date(NaiveDate),
}

impl fmt::Display for TimeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeKey::Index(i) => write!(f, "{i}"),
            TimeKey::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
        }
    }
}

impl TimeKey {
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            return Some(TimeKey::Date(d));
        }
        s.parse::<i64>().ok().map(TimeKey::Index)
    }
}

/// `T_total x N` matrix of strictly positive prices; one column per asset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PricePanel {
    pub labels: Vec<String>,
    pub times: Vec<TimeKey>,
    pub values: DMatrix<f64>,
}

impl PricePanel {
    pub fn new(labels: Vec<String>, times: Vec<TimeKey>, values: DMatrix<f64>) -> Result<Self> {
        if labels.len() != values.ncols() {
            return Err(Error::LengthMismatch { left: labels.len(), right: values.ncols() });
        }
        if times.len() != values.nrows() {
            return Err(Error::LengthMismatch { left: times.len(), right: values.nrows() });
        }
        if let Some(w) = times.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "times must be strictly increasing (row {})",
                w + 1
            )));
        }
        for (i, col) in values.column_iter().enumerate() {
            if let Some((row, &v)) = col.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
                return Err(Error::NonPositivePrice { asset: i, row, value: v });
            }
        }
        Ok(Self { labels, times, values })
    }

    pub fn n_times(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.values.column(i).iter().copied().collect()
    }

    /// Keep the listed assets, in the given order.
    pub fn select_assets(&self, idx: &[usize]) -> PricePanel {
        PricePanel {
            labels: idx.iter().map(|&i| self.labels[i].clone()).collect(),
            times: self.times.clone(),
            values: self.values.select_columns(idx),
        }
    }
}

/// `(T_total - 1) x N` returns. When `normalized` every row has zero mean
/// and unit population variance across assets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnPanel {
    pub labels: Vec<String>,
    pub values: DMatrix<f64>,
    pub normalized: bool,
}

impl ReturnPanel {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.values.ncols()
    }
}

/// `T x N` block of normalized returns starting at row `start`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMatrix {
    pub values: DMatrix<f64>,
    pub start: usize,
}

impl EpochMatrix {
    pub fn new(values: DMatrix<f64>, start: usize) -> Self {
        Self { values, start }
    }

    pub fn t(&self) -> usize {
        self.values.nrows()
    }

    pub fn n(&self) -> usize {
        self.values.ncols()
    }

    /// `Q = T / N`.
    pub fn q(&self) -> f64 {
        self.t() as f64 / self.n() as f64
    }
}

pub fn log_returns(panel: &PricePanel) -> Result<ReturnPanel> {
    let (rows, cols) = panel.values.shape();
    if rows < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 time rows, got {rows}")));
    }
    for i in 0..cols {
        for t in 0..rows {
            let v = panel.values[(t, i)];
            if !(v > 0.0) {
                return Err(Error::NonPositivePrice { asset: i, row: t, value: v });
            }
        }
    }
    let values = DMatrix::from_fn(rows - 1, cols, |t, i| {
        panel.values[(t + 1, i)].ln() - panel.values[(t, i)].ln()
    });
    Ok(ReturnPanel { labels: panel.labels.clone(), values, normalized: false })
}

/// Subtract the cross-asset mean of each row and divide by the population
/// standard deviation `sqrt(<x^2> - <x>^2)`.
pub fn normalize_cross_section(returns: &ReturnPanel) -> Result<ReturnPanel> {
    let (rows, n) = returns.values.shape();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 assets, got {n}")));
    }
    let mut out = returns.values.clone();
    let nf = n as f64;
    for t in 0..rows {
        let row = returns.values.row(t);
        let mean = row.iter().sum::<f64>() / nf;
        // centred two-pass variance; the textbook <x^2> - <x>^2 cancels badly
        let var = row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
        let sd = var.sqrt();
        if !(sd > 0.0) || !sd.is_finite() || sd <= 1e-300 || sd <= mean.abs() * 1e-14 {
            return Err(Error::DegenerateRow { row: t });
        }
        for i in 0..n {
            out[(t, i)] = (returns.values[(t, i)] - mean) / sd;
        }
    }
    Ok(ReturnPanel { labels: returns.labels.clone(), values: out, normalized: true })
}

/// Start rows of the epochs of length `t` over `rows` rows.
pub fn epoch_starts(rows: usize, t: usize, overlap: bool) -> Vec<usize> {
    if t == 0 || t > rows {
        return Vec::new();
    }
    if overlap {
        (0..=rows - t).collect()
    } else {
        (0..rows / t).map(|k| k * t).collect()
    }
}

/// Slice normalized returns into `T x N` epochs: disjoint consecutive blocks
/// (leftover rows at the end are dropped) or stride-1 sliding windows.
pub fn epoch_matrices(returns: &ReturnPanel, t: usize, overlap: bool) -> Result<Vec<EpochMatrix>> {
    if !returns.normalized {
        return Err(Error::InvalidParameter("epochs require normalized returns".into()));
    }
    let rows = returns.n_rows();
    if t == 0 {
        return Err(Error::InvalidParameter("epoch length must be >= 1".into()));
    }
    if t > rows {
        return Err(Error::EpochTooLong { t, available: rows });
    }
    Ok(epoch_starts(rows, t, overlap)
        .into_iter()
        .map(|s| EpochMatrix::new(returns.values.rows(s, t).into_owned(), s))
        .collect())
}
