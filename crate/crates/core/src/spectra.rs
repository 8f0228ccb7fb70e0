//! Wishart matrices `W = X^T X / T` of epoch matrices and their spectra.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::returns::EpochMatrix;
use crate::rng::rng_from_seed;

/// Eigenvalues with `|lambda| < ZERO_THRESHOLD * lambda_max` are set to zero.
pub const ZERO_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WishartMatrix {
    pub values: DMatrix<f64>,
    pub t: usize,
    pub start: usize,
}

impl WishartMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn q(&self) -> f64 {
        self.t as f64 / self.n() as f64
    }

    pub fn trace(&self) -> f64 {
        self.values.trace()
    }
}

/// Eigenvalues sorted in descending order, with the shape of the epoch they came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub t: usize,
    pub n: usize,
    pub start: usize,
}

impl Spectrum {
    pub fn q(&self) -> f64 {
        self.t as f64 / self.n as f64
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// `W = (1/T) X^T X`, symmetrized by averaging the two triangles.
pub fn wishart(epoch: &EpochMatrix) -> WishartMatrix {
    let t = epoch.t();
    let mut w = epoch.values.tr_mul(&epoch.values) / t as f64;
    let n = w.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (w[(i, j)] + w[(j, i)]);
            w[(i, j)] = m;
            w[(j, i)] = m;
        }
    }
    WishartMatrix { values: w, t, start: epoch.start }
}

fn sorted_clamped(mut ev: Vec<f64>) -> Vec<f64> {
    ev.sort_by(|a, b| b.total_cmp(a));
    let cut = ZERO_THRESHOLD * ev.first().copied().unwrap_or(0.0).abs();
    for v in &mut ev {
        if v.abs() < cut {
            *v = 0.0;
        }
    }
    ev
}

/// Symmetric eigenvalues, no vectors.
fn symmetric_eigenvalues(m: &DMatrix<f64>, start: usize) -> Result<Vec<f64>> {
    let ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    if ev.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenNonConvergence { start });
    }
    Ok(ev)
}

pub fn eigenvalues(w: &WishartMatrix) -> Result<Spectrum> {
    if w.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenNonConvergence { start: w.start });
    }
    let ev = symmetric_eigenvalues(&w.values, w.start)?;
    Ok(Spectrum { eigenvalues: sorted_clamped(ev), t: w.t, n: w.n(), start: w.start })
}

/// Largest eigenvalue of `W` through the smaller of the two Gram matrices
/// (`X X^T / T` shares the nonzero spectrum of `X^T X / T`).
pub fn lambda_max(epoch: &EpochMatrix) -> Result<f64> {
    let t = epoch.t() as f64;
    let g = if epoch.t() < epoch.n() {
        &epoch.values * epoch.values.transpose() / t
    } else {
        epoch.values.tr_mul(&epoch.values) / t
    };
    let ev = symmetric_eigenvalues(&g, epoch.start)?;
    Ok(ev.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// The strictly positive eigenvalues: exactly `T` of them when `T < N`.
/// When `T >= N` either `N` or `N - 1` are accepted, since epochs whose
/// rows are centred across assets lose the uniform direction.
pub fn nonzero_spectrum(s: &Spectrum) -> Result<Vec<f64>> {
    let expected = s.t.min(s.n);
    let nz: Vec<f64> = s.eigenvalues.iter().copied().filter(|&v| v != 0.0).collect();
    let count_ok = nz.len() == expected || (s.t >= s.n && nz.len() + 1 == s.n);
    if !count_ok || nz.iter().any(|&v| v < 0.0) {
        return Err(Error::UnexpectedRank { expected, found: nz.iter().filter(|&&v| v > 0.0).count() });
    }
    Ok(nz)
}

/// Upper-triangle entries `W_ij, i <= j`, pooled across matrices.
pub fn collect_element_samples(ws: &[WishartMatrix]) -> Result<Vec<f64>> {
    if ws.is_empty() {
        return Err(Error::Empty("wishart matrices"));
    }
    let mut out = Vec::with_capacity(ws.iter().map(|w| w.n() * (w.n() + 1) / 2).sum());
    for w in ws {
        let n = w.n();
        for j in 0..n {
            for i in 0..=j {
                out.push(w.values[(i, j)]);
            }
        }
    }
    Ok(out)
}

/// Uniform random permutation of all `T * N` entries (Fisher–Yates).
pub fn shuffle_matrix(epoch: &EpochMatrix, seed: u64) -> EpochMatrix {
    let (t, n) = epoch.values.shape();
    let mut flat: Vec<f64> = epoch.values.iter().copied().collect();
    flat.shuffle(&mut rng_from_seed(seed));
    EpochMatrix::new(DMatrix::from_vec(t, n, flat), epoch.start)
}

/// Marchenko–Pastur upper edge `sigma2 (1 + Q^-1/2)^2`.
pub fn mp_edge(q: f64, sigma2: f64) -> f64 {
    sigma2 * (1.0 + q.powf(-0.5)).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn epoch(rows: usize, cols: usize, data: &[f64]) -> EpochMatrix {
        EpochMatrix::new(DMatrix::from_row_slice(rows, cols, data), 0)
    }

    #[test]
    fn wishart_hand_products() {
        let w = wishart(&epoch(2, 2, &[1.0, 0.0, 0.0, 1.0]));
        assert_eq!(w.values, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]));
        let w = wishart(&epoch(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        assert_eq!(w.values, DMatrix::from_row_slice(2, 2, &[5.0, 7.0, 7.0, 10.0]));
    }

    #[test]
    fn eigen_hand_values() {
        let s = eigenvalues(&WishartMatrix { values: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0])), t: 2, start: 0 }).unwrap();
        assert_eq!(s.eigenvalues, vec![2.0, 1.0]);

        let w = wishart(&epoch(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let s = eigenvalues(&w).unwrap();
        let r = 221f64.sqrt();
        assert!((s.eigenvalues[0] - (15.0 + r) / 2.0).abs() < 1e-10);
        assert!((s.eigenvalues[1] - (15.0 - r) / 2.0).abs() < 1e-10);

        let w = wishart(&epoch(1, 3, &[1.0, 2.0, 2.0]));
        let s = eigenvalues(&w).unwrap();
        assert!((s.eigenvalues[0] - 9.0).abs() < 1e-10);
        assert_eq!(&s.eigenvalues[1..], &[0.0, 0.0]);
        assert_eq!(nonzero_spectrum(&s).unwrap().len(), 1);
    }

    #[test]
    fn element_counts() {
        let w = wishart(&epoch(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        assert_eq!(collect_element_samples(std::slice::from_ref(&w)).unwrap(), vec![5.0, 7.0, 10.0]);
        let ws = vec![wishart(&epoch(1, 4, &[1.0, 2.0, 3.0, 4.0])); 3];
        assert_eq!(collect_element_samples(&ws).unwrap().len(), 3 * 10);
        assert!(collect_element_samples(&[]).is_err());
    }

    #[test]
    fn rank_check() {
        let s = Spectrum { eigenvalues: vec![3.0, 1.0, 0.0], t: 1, n: 3, start: 0 };
        assert!(matches!(nonzero_spectrum(&s), Err(Error::UnexpectedRank { expected: 1, found: 2 })));
        let s = Spectrum { eigenvalues: vec![3.0, 1.0, 0.5], t: 3, n: 3, start: 0 };
        assert_eq!(nonzero_spectrum(&s).unwrap().len(), 3);
        let s = Spectrum { eigenvalues: vec![3.0, 1.0, 0.0], t: 5, n: 3, start: 0 };
        assert_eq!(nonzero_spectrum(&s).unwrap().len(), 2);
        let s = Spectrum { eigenvalues: vec![3.0, 0.0, 0.0], t: 5, n: 3, start: 0 };
        assert!(nonzero_spectrum(&s).is_err());
        let s = Spectrum { eigenvalues: vec![3.0, 1.0, 0.0, 0.0], t: 3, n: 4, start: 0 };
        assert!(matches!(nonzero_spectrum(&s), Err(Error::UnexpectedRank { expected: 3, found: 2 })));
    }

    #[test]
    fn gaussian_rank_and_trace() {
        let mut rng = rng_from_seed(3);
        for (t, n) in [(10, 40), (40, 40), (60, 40)] {
            let data: Vec<f64> = (0..t * n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let e = epoch(t, n, &data);
            let w = wishart(&e);
            let s = eigenvalues(&w).unwrap();
            let nz = nonzero_spectrum(&s).unwrap();
            assert_eq!(nz.len(), t.min(n));
            let sum: f64 = s.eigenvalues.iter().sum();
            let sq: f64 = data.iter().map(|x| x * x).sum::<f64>() / t as f64;
            assert!((sum / sq - 1.0).abs() < 1e-8);
            assert!((lambda_max(&e).unwrap() / s.lambda_max() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn mp_edge_values() {
        assert_eq!(mp_edge(1.0, 1.0), 4.0);
        assert_eq!(mp_edge(0.25, 1.0), 9.0);
        assert!((mp_edge(1e12, 1.0) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn shuffle_cell_frequencies() {
        // each marker lands in each cell with probability 1/4
        let e = epoch(2, 2, &[0.0, 1.0, 2.0, 3.0]);
        let trials = 10_000;
        let mut counts = [[0u32; 4]; 4];
        for s in 0..trials {
            let sh = shuffle_matrix(&e, s);
            for (cell, v) in sh.values.iter().enumerate() {
                counts[*v as usize][cell] += 1;
            }
        }
        let p = 0.25;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        for row in counts {
            for c in row {
                assert!((c as f64 / trials as f64 - p).abs() < 3.0 * se + 1e-3, "{c}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn shuffle_preserves_multiset_and_trace(seed in any::<u64>(), data in proptest::collection::vec(-5.0f64..5.0, 24)) {
            let e = epoch(4, 6, &data);
            let sh = shuffle_matrix(&e, seed);
            let mut a: Vec<f64> = e.values.iter().copied().collect();
            let mut b: Vec<f64> = sh.values.iter().copied().collect();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            prop_assert_eq!(a, b);
            prop_assert_eq!(&sh, &shuffle_matrix(&e, seed));
            let ta = wishart(&e).trace();
            let tb = wishart(&sh).trace();
            prop_assert!((ta - tb).abs() <= 1e-10 * ta.abs().max(1.0));
        }

        #[test]
        fn row_permutation_keeps_spectrum(seed in any::<u64>(), data in proptest::collection::vec(-5.0f64..5.0, 24)) {
            let e = epoch(6, 4, &data);
            let mut rows: Vec<usize> = (0..6).collect();
            rows.shuffle(&mut rng_from_seed(seed));
            let p = EpochMatrix::new(e.values.select_rows(&rows), 0);
            let a = eigenvalues(&wishart(&e)).unwrap().eigenvalues;
            let b = eigenvalues(&wishart(&p)).unwrap().eigenvalues;
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-9 * a[0].max(1.0));
            }
        }
    }
}
