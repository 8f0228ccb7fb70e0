//! Monte Carlo reference for the GOE Tracy–Widom law and Wishart edge rescaling.
//!
//! GOE matrices (off-diagonal variance 1, diagonal variance 2) are sampled
//! in the equivalent tridiagonal form: diagonal `N(0, 2)`, off-diagonal
//! `chi_{n-1}, ..., chi_1`. Its largest eigenvalue is found by Sturm-count
//! bisection and mapped to `(lambda_max - 2 sqrt(n)) n^(1/6)`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{child_seed, rng_from_seed};
use crate::statfit::ks_two_sample;

/// Default cap on `n_matrices * matrix_size`.
pub const DEFAULT_TW_BUDGET: u64 = 20_000_000;

const MIN_MATRICES: usize = 1000;
const MIN_SIZE: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwReference {
    /// Sorted rescaled maxima.
    pub samples: Vec<f64>,
    pub n_matrices: usize,
    pub matrix_size: usize,
    pub seed: u64,
}

impl TwReference {
    pub fn cdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&v| v <= x) as f64 / self.samples.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn ks_distance(&self, other: &[f64]) -> f64 {
        ks_two_sample(&self.samples, other)
    }

    pub fn cache_file_name(n_matrices: usize, matrix_size: usize, seed: u64) -> String {
        format!("tw1_goe_m{n_matrices}_n{matrix_size}_s{seed}.csv")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "# tw1-goe-reference").map_err(io)?;
        writeln!(w, "# n_matrices={}", self.n_matrices).map_err(io)?;
        writeln!(w, "# matrix_size={}", self.matrix_size).map_err(io)?;
        writeln!(w, "# seed={}", self.seed).map_err(io)?;
        writeln!(w, "value").map_err(io)?;
        for v in &self.samples {
            writeln!(w, "{v:e}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let parse_err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
        let (mut n_matrices, mut matrix_size, mut seed) = (None, None, None);
        let mut samples = Vec::new();
        for (k, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim();
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((key, val)) = meta.trim().split_once('=') {
                    let bad = |_| parse_err(k + 1, format!("bad metadata value {val:?}"));
                    match key {
                        "n_matrices" => n_matrices = Some(val.parse().map_err(bad)?),
                        "matrix_size" => matrix_size = Some(val.parse().map_err(bad)?),
                        "seed" => seed = Some(val.parse().map_err(bad)?),
                        _ => {}
                    }
                }
                continue;
            }
            if line.is_empty() || line == "value" {
                continue;
            }
            samples.push(line.parse::<f64>().map_err(|e| parse_err(k + 1, e.to_string()))?);
        }
        match (n_matrices, matrix_size, seed) {
            (Some(n_matrices), Some(matrix_size), Some(seed)) if samples.len() == n_matrices => {
                Ok(Self { samples, n_matrices, matrix_size, seed })
            }
            _ => Err(parse_err(0, "incomplete reference table".into())),
        }
    }
}

/// Number of eigenvalues of the symmetric tridiagonal `(diag, off)` below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = diag[0] - x;
    if d < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let prev = if d == 0.0 { f64::MIN_POSITIVE } else { d };
        d = diag[i] - x - off[i - 1] * off[i - 1] / prev;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

pub(crate) fn tridiagonal_lambda_max(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-13 * hi.abs().max(1.0) {
            break;
        }
        if sturm_count(diag, off, mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn goe_tw_sample(n: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let diag: Vec<f64> = (0..n)
        .map(|_| std::f64::consts::SQRT_2 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let off: Vec<f64> = (1..n)
        .map(|k| ChiSquared::new((n - k) as f64).expect("positive dof").sample(&mut rng).sqrt())
        .collect();
    let nf = n as f64;
    (tridiagonal_lambda_max(&diag, &off) - 2.0 * nf.sqrt()) * nf.powf(1.0 / 6.0)
}

/// Build the reference: `n_matrices` GOE matrices of size `matrix_size`,
/// matrix `i` seeded with `child_seed(seed, i)`.
pub fn tracy_widom_goe_reference(n_matrices: usize, matrix_size: usize, seed: u64, budget: u64) -> Result<TwReference> {
    if n_matrices < MIN_MATRICES || matrix_size < MIN_SIZE {
        return Err(Error::InvalidParameter(format!(
            "TW reference needs >= {MIN_MATRICES} matrices of size >= {MIN_SIZE}"
        )));
    }
    let requested = n_matrices as u64 * matrix_size as u64;
    if requested > budget {
        return Err(Error::BudgetExceeded { requested, budget });
    }
    let mut samples: Vec<f64> = (0..n_matrices)
        .into_par_iter()
        .map(|i| goe_tw_sample(matrix_size, child_seed(seed, i as u64)))
        .collect();
    samples.sort_by(f64::total_cmp);
    Ok(TwReference { samples, n_matrices, matrix_size, seed })
}

/// Read the reference from `cache_dir` if present, otherwise build and store it.
pub fn load_or_build_reference(
    cache_dir: Option<&Path>,
    n_matrices: usize,
    matrix_size: usize,
    seed: u64,
    budget: u64,
) -> Result<TwReference> {
    let path: Option<PathBuf> = cache_dir.map(|d| d.join(TwReference::cache_file_name(n_matrices, matrix_size, seed)));
    if let Some(p) = &path {
        if p.exists() {
            if let Ok(r) = TwReference::read_csv(p) {
                if r.matrix_size == matrix_size && r.seed == seed {
                    return Ok(r);
                }
            }
            log::warn!("ignoring unreadable TW cache {}", p.display());
        }
    }
    let r = tracy_widom_goe_reference(n_matrices, matrix_size, seed, budget)?;
    if let Some(p) = &path {
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        r.write_csv(p)?;
    }
    Ok(r)
}

/// Wishart edge centring and scaling:
/// `mu = (sqrt(T-1) + sqrt(N))^2 / T`,
/// `sigma = ((sqrt(T-1) + sqrt(N)) / T) (1/sqrt(T-1) + 1/sqrt(N))^(1/3)`.
pub fn rescale_to_tw(maxima: &[f64], t: usize, n: usize) -> Result<Vec<f64>> {
    if t < 2 || n < 1 {
        return Err(Error::InvalidParameter(format!("rescaling needs T >= 2 and N >= 1, got T = {t}, N = {n}")));
    }
    let (a, b) = (((t - 1) as f64).sqrt(), (n as f64).sqrt());
    let tf = t as f64;
    let mu = (a + b).powi(2) / tf;
    let sigma = (a + b) / tf * (1.0 / a + 1.0 / b).powf(1.0 / 3.0);
    Ok(maxima.iter().map(|l| (l - mu) / sigma).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn bisection_matches_dense_solver() {
        let diag = [1.0, -2.0, 0.5, 3.0, 0.0];
        let off = [0.7, 1.1, -0.4, 2.0];
        let dense = DMatrix::from_fn(5, 5, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        });
        let ev = dense.symmetric_eigenvalues();
        let max = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((tridiagonal_lambda_max(&diag, &off) - max).abs() < 1e-11);
        assert_eq!(sturm_count(&diag, &off, max + 1e-6), 5);
        assert_eq!(sturm_count(&diag, &off, max - 1e-6), 4);
    }

    #[test]
    fn reference_is_deterministic_and_self_consistent() {
        let a = tracy_widom_goe_reference(2000, 200, 9, DEFAULT_TW_BUDGET).unwrap();
        let b = tracy_widom_goe_reference(2000, 200, 9, DEFAULT_TW_BUDGET).unwrap();
        assert_eq!(a, b);
        let c = tracy_widom_goe_reference(2000, 200, 10, DEFAULT_TW_BUDGET).unwrap();
        assert!(a.ks_distance(&c.samples) < 0.05);
        assert!((a.cdf(a.samples[999]) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn reference_limits() {
        assert!(tracy_widom_goe_reference(999, 200, 0, DEFAULT_TW_BUDGET).is_err());
        assert!(tracy_widom_goe_reference(1000, 199, 0, DEFAULT_TW_BUDGET).is_err());
        assert!(matches!(
            tracy_widom_goe_reference(1000, 200, 0, 100),
            Err(Error::BudgetExceeded { requested: 200_000, budget: 100 })
        ));
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = load_or_build_reference(Some(dir.path()), 1000, 200, 3, DEFAULT_TW_BUDGET).unwrap();
        let path = dir.path().join(TwReference::cache_file_name(1000, 200, 3));
        assert!(path.exists());
        let b = load_or_build_reference(Some(dir.path()), 1000, 200, 3, DEFAULT_TW_BUDGET).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rescaling_linearity() {
        let (t, n) = (100, 262);
        let (a, b) = (99f64.sqrt(), 262f64.sqrt());
        let mu = (a + b).powi(2) / 100.0;
        let z = rescale_to_tw(&[mu, mu, mu], t, n).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-12));
        let z = rescale_to_tw(&[mu + 1.0, mu - 1.0], t, n).unwrap();
        assert!((z[0] + z[1]).abs() < 1e-12);
        assert!(rescale_to_tw(&[1.0], 1, 5).is_err());
    }
}
