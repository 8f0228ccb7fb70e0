//! Generalized extreme-value distribution: CDFs and maximum-likelihood fit.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::nelder_mead;

/// `|xi| <= XI_TOL` is classified as Gumbel.
pub const XI_TOL: f64 = 0.05;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvtFamily {
    Frechet,
    Gumbel,
    Weibull,
}

impl EvtFamily {
    pub fn classify(xi: f64) -> Self {
        if xi.abs() <= XI_TOL {
            EvtFamily::Gumbel
        } else if xi > 0.0 {
            EvtFamily::Frechet
        } else {
            EvtFamily::Weibull
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvtFit {
    pub shape: f64,
    pub location: f64,
    pub scale: f64,
    pub loglik: f64,
    pub family: EvtFamily,
    /// Asymptotic standard errors from the observed information; `None`
    /// when the Hessian is not positive definite.
    pub shape_stderr: Option<f64>,
    pub location_stderr: Option<f64>,
    pub scale_stderr: Option<f64>,
    pub n: usize,
}

impl EvtFit {
    /// Wald 95% interval for the shape.
    pub fn shape_ci95(&self) -> Option<(f64, f64)> {
        self.shape_stderr.map(|se| (self.shape - 1.96 * se, self.shape + 1.96 * se))
    }
}

/// `exp(-((x - m) / s)^-a)` for `x > m`, else 0.
pub fn frechet_cdf(x: f64, a: f64, m: f64, s: f64) -> f64 {
    if x <= m {
        0.0
    } else {
        (-((x - m) / s).powf(-a)).exp()
    }
}

pub fn gumbel_cdf(x: f64, m: f64, s: f64) -> f64 {
    (-(-(x - m) / s).exp()).exp()
}

/// GEV CDF `exp(-(1 + xi z)^(-1/xi))`, Gumbel at `xi = 0`.
pub fn gev_cdf(x: f64, xi: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    if xi == 0.0 {
        return gumbel_cdf(x, mu, sigma);
    }
    let t = 1.0 + xi * z;
    if t <= 0.0 {
        return if xi > 0.0 { 0.0 } else { 1.0 };
    }
    (-(t.ln() * (-1.0 / xi)).exp()).exp()
}

fn gev_logpdf(x: f64, mu: f64, sigma: f64, xi: f64) -> f64 {
    let z = (x - mu) / sigma;
    if xi.abs() < 1e-9 {
        return -sigma.ln() - z - (-z).exp();
    }
    let t = 1.0 + xi * z;
    if t <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let lt = t.ln();
    -sigma.ln() - (1.0 + 1.0 / xi) * lt - (-lt / xi).exp()
}

fn loglik(xs: &[f64], mu: f64, sigma: f64, xi: f64) -> f64 {
    if !(sigma > 0.0) {
        return f64::NEG_INFINITY;
    }
    xs.iter().map(|&x| gev_logpdf(x, mu, sigma, xi)).sum()
}

/// Observed information by central differences at the optimum.
fn stderrs(xs: &[f64], p: [f64; 3]) -> Option<[f64; 3]> {
    let h = [1e-4 * p[1], 1e-4 * p[1], 1e-4];
    let f = |q: [f64; 3]| -loglik(xs, q[0], q[1], q[2]);
    let mut hess = Matrix3::zeros();
    for i in 0..3 {
        for j in i..3 {
            let at = |di: f64, dj: f64| {
                let mut q = p;
                q[i] += di * h[i];
                q[j] += dj * h[j];
                f(q)
            };
            let v = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    let cov = hess.cholesky()?.inverse();
    let se = [cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt(), cov[(2, 2)].sqrt()];
    se.iter().all(|v| v.is_finite()).then_some(se)
}

/// Maximum-likelihood GEV fit. The data are standardized before the
/// Nelder–Mead search, which starts from the Gumbel moment estimates at
/// several shapes.
pub fn gev_fit(maxima: &[f64]) -> Result<EvtFit> {
    let n = maxima.len();
    if n < 100 {
        return Err(Error::InsufficientData(format!("GEV fit needs >= 100 maxima, got {n}")));
    }
    if maxima.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("non-finite maximum".into()));
    }
    let mean = maxima.iter().sum::<f64>() / n as f64;
    let sd = (maxima.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    if !(sd > 1e-12 * mean.abs().max(1e-300)) {
        return Err(Error::Degenerate("maxima are constant".into()));
    }
    let z: Vec<f64> = maxima.iter().map(|x| (x - mean) / sd).collect();

    let s0 = 6f64.sqrt() / std::f64::consts::PI;
    let m0 = -EULER_GAMMA * s0;
    let objective = |p: &[f64; 3]| -loglik(&z, p[0], p[1].exp(), p[2]);
    let best = [-0.3, 0.0, 0.2, 0.5]
        .iter()
        .map(|&xi0| nelder_mead(objective, [m0, s0.ln(), xi0], [0.2, 0.2, 0.1], 1e-12, 20_000))
        .filter(|m| m.f.is_finite())
        .min_by(|a, b| a.f.total_cmp(&b.f))
        .ok_or_else(|| Error::NonConvergence("GEV likelihood is infinite at every start".into()))?;
    if !best.converged {
        return Err(Error::NonConvergence("GEV Nelder–Mead hit its iteration cap".into()));
    }
    let (mu_z, sigma_z, xi) = (best.x[0], best.x[1].exp(), best.x[2]);
    let location = mean + sd * mu_z;
    let scale = sd * sigma_z;
    let se = stderrs(&z, [mu_z, sigma_z, xi]);
    Ok(EvtFit {
        shape: xi,
        location,
        scale,
        loglik: -best.f - n as f64 * sd.ln(),
        family: EvtFamily::classify(xi),
        shape_stderr: se.map(|s| s[2]),
        location_stderr: se.map(|s| s[0] * sd),
        scale_stderr: se.map(|s| s[1] * sd),
        n,
    })
}
