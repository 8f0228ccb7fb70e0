//! Derivative-free minimization used by the likelihood fits.

pub(crate) struct Minimum<const D: usize> {
    pub x: [f64; D],
    pub f: f64,
    pub converged: bool,
}

/// Nelder–Mead with the standard coefficients (1, 2, 1/2, 1/2).
pub(crate) fn nelder_mead<const D: usize, F>(f: F, x0: [f64; D], step: [f64; D], f_tol: f64, max_iter: usize) -> Minimum<D>
where
    F: Fn(&[f64; D]) -> f64,
{
    let eval = |x: &[f64; D]| {
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };
    let mut simplex: Vec<([f64; D], f64)> = Vec::with_capacity(D + 1);
    simplex.push((x0, eval(&x0)));
    for i in 0..D {
        let mut x = x0;
        x[i] += step[i];
        simplex.push((x, eval(&x)));
    }
    let mut converged = false;
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[D].1);
        if best.is_finite() && (worst - best).abs() <= f_tol * (1.0 + best.abs()) {
            converged = true;
            break;
        }
        let mut centroid = [0.0; D];
        for (x, _) in &simplex[..D] {
            for i in 0..D {
                centroid[i] += x[i] / D as f64;
            }
        }
        let along = |t: f64| {
            let mut p = [0.0; D];
            for i in 0..D {
                p[i] = centroid[i] + t * (simplex[D].0[i] - centroid[i]);
            }
            p
        };
        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe);
            simplex[D] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[D - 1].1 {
            simplex[D] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[D].1 {
                let x = along(-0.5);
                (x, eval(&x))
            } else {
                let x = along(0.5);
                (x, eval(&x))
            };
            if fc < simplex[D].1.min(fr) {
                simplex[D] = (xc, fc);
            } else {
                let x_best = simplex[0].0;
                for (x, fx) in simplex.iter_mut().skip(1) {
                    for i in 0..D {
                        x[i] = x_best[i] + 0.5 * (x[i] - x_best[i]);
                    }
                    *fx = eval(x);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    Minimum { x: simplex[0].0, f: simplex[0].1, converged }
}
