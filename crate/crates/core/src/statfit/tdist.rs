//! Three-parameter Student-t maximum likelihood by profiling over the
//! degrees of freedom.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{det_sum, sorted};
use crate::error::{Error, Result};

pub const NU_MIN: f64 = 0.5;
pub const NU_MAX: f64 = 50.0;

const GRID: usize = 24;
const EM_MAX_ITER: usize = 2000;
const EM_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TDistFit {
    pub nu0: f64,
    pub location: f64,
    pub scale: f64,
    pub loglik: f64,
    /// The profile maximum sits on the upper search bound: report as `>= NU_MAX`.
    pub at_upper_bound: bool,
}

#[derive(Clone, Copy)]
struct Profile {
    nu: f64,
    loc: f64,
    scale: f64,
    loglik: f64,
}

fn loglik(xs: &[f64], nu: f64, loc: f64, scale: f64) -> f64 {
    let n = xs.len() as f64;
    let c = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (nu * std::f64::consts::PI).ln() - scale.ln();
    let s = det_sum(xs, |x| {
        let z = (x - loc) / scale;
        (z * z / nu).ln_1p()
    });
    n * c - 0.5 * (nu + 1.0) * s
}

/// EM iterations for location and scale at fixed `nu`.
fn profile(xs: &[f64], nu: f64, mut loc: f64, mut scale: f64) -> Result<Profile> {
    let n = xs.len() as f64;
    for _ in 0..EM_MAX_ITER {
        let s2 = scale * scale;
        let w = |x: f64| (nu + 1.0) / (nu + (x - loc).powi(2) / s2);
        let sw = det_sum(xs, w);
        let swx = det_sum(xs, |x| w(x) * x);
        let new_loc = swx / sw;
        let swr = det_sum(xs, |x| w(x) * (x - new_loc).powi(2));
        let new_scale = (swr / n).sqrt();
        if !(new_scale > 0.0 && new_loc.is_finite()) {
            return Err(Error::NonConvergence(format!("t-fit EM collapsed at nu = {nu}")));
        }
        let done = (new_loc - loc).abs() <= EM_TOL * new_scale && (new_scale / scale - 1.0).abs() <= EM_TOL;
        loc = new_loc;
        scale = new_scale;
        if done {
            return Ok(Profile { nu, loc, scale, loglik: loglik(xs, nu, loc, scale) });
        }
    }
    Err(Error::NonConvergence(format!("t-fit EM did not converge at nu = {nu}")))
}

/// Maximum-likelihood `(nu0, location, scale)` with `nu0` searched on
/// `[NU_MIN, NU_MAX]`: a log-spaced grid followed by golden-section
/// refinement around the best grid point.
pub fn student_t_fit(samples: &[f64]) -> Result<TDistFit> {
    if samples.len() < 1000 {
        return Err(Error::InsufficientData(format!("t-fit needs >= 1000 samples, got {}", samples.len())));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample".into()));
    }
    let v = sorted(samples);
    let n = v.len();
    let median = v[n / 2];
    let iqr = v[(3 * n) / 4] - v[n / 4];
    if !(iqr > 0.0) {
        return Err(Error::Degenerate("samples have zero interquartile range".into()));
    }

    let (lmin, lmax) = (NU_MIN.ln(), NU_MAX.ln());
    let grid: Vec<f64> = (0..GRID).map(|i| (lmin + (lmax - lmin) * i as f64 / (GRID - 1) as f64).exp()).collect();
    let mut profiles = Vec::with_capacity(GRID);
    let (mut loc, mut scale) = (median, iqr / 2.0);
    for &nu in &grid {
        let p = profile(samples, nu, loc, scale)?;
        loc = p.loc;
        scale = p.scale;
        profiles.push(p);
    }
    let best = (0..GRID).max_by(|&a, &b| profiles[a].loglik.total_cmp(&profiles[b].loglik)).unwrap();

    // golden section on ln(nu) between the neighbours of the best grid point
    let mut a = grid[best.saturating_sub(1)].ln();
    let mut b = grid[(best + 1).min(GRID - 1)].ln();
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let start = profiles[best];
    let eval = |lnu: f64, from: &Profile| profile(samples, lnu.exp(), from.loc, from.scale);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut pc = eval(c, &start)?;
    let mut pd = eval(d, &start)?;
    for _ in 0..40 {
        if (b - a).abs() < 1e-5 {
            break;
        }
        if pc.loglik > pd.loglik {
            b = d;
            d = c;
            pd = pc;
            c = b - g * (b - a);
            pc = eval(c, &pd)?;
        } else {
            a = c;
            c = d;
            pc = pd;
            d = a + g * (b - a);
            pd = eval(d, &pc)?;
        }
    }
    let mut opt = if pc.loglik > pd.loglik { pc } else { pd };
    if start.loglik > opt.loglik {
        opt = start;
    }
    let at_upper_bound = opt.nu >= NU_MAX * 0.999;
    Ok(TDistFit { nu0: opt.nu, location: opt.loc, scale: opt.scale, loglik: opt.loglik, at_upper_bound })
}
