use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Log-binned density estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub densities: Vec<f64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Geometric bin centres.
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect()
    }

    pub fn integral(&self) -> f64 {
        self.densities
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, w)| d * (w[1] - w[0]))
            .sum()
    }
}

/// Edges at `10^(j / bins_per_decade)` covering the sample range.
pub fn log_binned_histogram(samples: &[f64], bins_per_decade: usize) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(Error::Empty("samples"));
    }
    if bins_per_decade < 2 {
        return Err(Error::InvalidParameter(format!("bins_per_decade must be >= 2, got {bins_per_decade}")));
    }
    if let Some(x) = samples.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidParameter(format!("non-positive sample {x}")));
    }
    let b = bins_per_decade as f64;
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(0.0, f64::max);
    let j0 = (lo.log10() * b).floor() as i64;
    let mut j1 = (hi.log10() * b).floor() as i64 + 1;
    if j1 <= j0 {
        j1 = j0 + 1;
    }
    let edges: Vec<f64> = (j0..=j1).map(|j| 10f64.powf(j as f64 / b)).collect();
    let nbins = edges.len() - 1;
    let mut counts = vec![0u64; nbins];
    for &x in samples {
        // locate by log then correct for rounding at the edges
        let mut k = ((x.log10() * b).floor() as i64 - j0).clamp(0, nbins as i64 - 1) as usize;
        while k > 0 && x < edges[k] {
            k -= 1;
        }
        while k + 1 < nbins && x >= edges[k + 1] {
            k += 1;
        }
        counts[k] += 1;
    }
    let total = samples.len() as f64;
    let densities = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, w)| c as f64 / (total * (w[1] - w[0])))
        .collect();
    Ok(Histogram { edges, counts, densities })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statfit::ols;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn repeated_value_single_bin() {
        let h = log_binned_histogram(&[3.0; 50], 5).unwrap();
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.total(), 50);
        assert!((h.integral() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn empty_bins_have_zero_density() {
        let h = log_binned_histogram(&[1.0, 1000.0], 4).unwrap();
        assert_eq!(h.total(), 2);
        assert!(h.counts.iter().any(|&c| c == 0));
        assert!(h.counts.iter().zip(&h.densities).all(|(&c, &d)| (c == 0) == (d == 0.0)));
        assert!((h.integral() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn pareto_density_slope() {
        let mut rng = rng_from_seed(31);
        let xs: Vec<f64> = (0..100_000).map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / 1.5)).collect();
        let h = log_binned_histogram(&xs, 10).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (c, (d, w)) in h.centers().iter().zip(h.densities.iter().zip(h.edges.windows(2))) {
            if w[0] >= 10.0 && w[1] <= 100.0 + 1e-9 && *d > 0.0 {
                x.push(c.ln());
                y.push(d.ln());
            }
        }
        let slope = ols(&x, &y).unwrap().slope;
        assert!((slope + 2.5).abs() < 0.15, "{slope}");
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(log_binned_histogram(&[1.0, 0.0], 5).is_err());
        assert!(log_binned_histogram(&[1.0], 1).is_err());
    }
}
