use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::{AnalysisReport, TailScan};
use super::read_report;
use crate::error::{Error, Result};
use crate::evt::LambdaMaxCurve;

/// Points agree when `|a - b| <= AGREEMENT_SIGMAS * sqrt(se_a^2 + se_b^2)`.
pub const AGREEMENT_SIGMAS: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricDiff {
    pub metric: String,
    pub q: f64,
    pub t_a: usize,
    pub t_b: usize,
    pub value_a: f64,
    pub value_b: f64,
    pub diff: f64,
    pub joint_stderr: f64,
    pub agree: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub points: Vec<MetricDiff>,
    pub n_agree: usize,
    pub n_disagree: usize,
}

impl Comparison {
    pub fn metric(&self, name: &str) -> impl Iterator<Item = &MetricDiff> + '_ {
        let name = name.to_string();
        self.points.iter().filter(move |p| p.metric == name)
    }
}

/// `(q, t, value, stderr)` per point.
type Series = Vec<(f64, usize, f64, f64)>;

fn tail_series(scan: &TailScan) -> Series {
    scan.points.iter().map(|p| (p.q, p.t, p.ks_fit.exponent, p.ks_fit.stderr)).collect()
}

fn curve_series(curve: &LambdaMaxCurve) -> Series {
    curve.points.iter().filter(|p| !p.flagged).map(|p| (p.q, p.t, p.mean, p.stderr)).collect()
}

fn same_q(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

fn diff_series(metric: &str, a: &Series, b: &Series, out: &mut Vec<MetricDiff>) {
    for &(q, t_a, value_a, se_a) in a {
        if let Some(&(_, t_b, value_b, se_b)) = b.iter().find(|(qb, ..)| same_q(q, *qb)) {
            let diff = value_a - value_b;
            let joint_stderr = se_a.hypot(se_b);
            let agree = if joint_stderr > 0.0 { diff.abs() <= AGREEMENT_SIGMAS * joint_stderr } else { diff == 0.0 };
            out.push(MetricDiff { metric: metric.into(), q, t_a, t_b, value_a, value_b, diff, joint_stderr, agree });
        }
    }
}

/// Per-Q differences of the element exponent `nu`, the eigenvalue exponent
/// `gamma` and `<lambda_max>` between two reports.
pub fn compare(a: &AnalysisReport, b: &AnalysisReport) -> Result<Comparison> {
    let pairs: [(&str, Option<Series>, Option<Series>); 3] = [
        ("nu", a.elements.as_ref().map(tail_series), b.elements.as_ref().map(tail_series)),
        ("gamma", a.spectra.as_ref().map(tail_series), b.spectra.as_ref().map(tail_series)),
        ("lambda_max", a.evt.as_ref().map(|e| curve_series(&e.curve)), b.evt.as_ref().map(|e| curve_series(&e.curve))),
    ];
    let mut shared = 0;
    let mut points = Vec::new();
    for (metric, sa, sb) in &pairs {
        if let (Some(sa), Some(sb)) = (sa, sb) {
            shared += 1;
            diff_series(metric, sa, sb, &mut points);
        }
    }
    if shared == 0 {
        return Err(Error::InvalidParameter("the reports share no comparable analyses".into()));
    }
    if points.is_empty() {
        return Err(Error::DisjointGrids);
    }
    let n_agree = points.iter().filter(|p| p.agree).count();
    Ok(Comparison { n_disagree: points.len() - n_agree, n_agree, points })
}

pub fn compare_files(a: impl AsRef<Path>, b: impl AsRef<Path>) -> Result<Comparison> {
    compare(&read_report(a)?, &read_report(b)?)
}
