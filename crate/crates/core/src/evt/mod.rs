//! Extreme-value statistics of the largest eigenvalues.

mod gev;
mod lambda_max;
mod tracy_widom;

pub use gev::{frechet_cdf, gev_cdf, gev_fit, gumbel_cdf, EvtFamily, EvtFit, XI_TOL};
pub(crate) use lambda_max::curve_from_samples;
pub use lambda_max::{
    lambda_max_samples, max_eigenvalue_samples, mean_lambda_max_curve, rescale_curve, shuffled_lambda_max_samples,
    CurveSource, LambdaMaxCurve, LambdaMaxPoint, DEFAULT_RESCALE_EXPONENT, MIN_EPOCHS,
};
pub use tracy_widom::{
    load_or_build_reference, rescale_to_tw, tracy_widom_goe_reference, TwReference, DEFAULT_TW_BUDGET,
};
