//! Lévy-flight market model and the empirical analyses used to compare it
//! with real equity panels: trajectory geometry, return statistics,
//! Wishart spectra, tail fits and extreme-value analysis of the largest
//! eigenvalue.

pub mod error;
pub mod evt;
pub mod geometry;
pub mod ingest;
pub mod levy_walk;
mod optim;
pub mod pipeline;
pub mod returns;
pub mod rng;
pub mod spectra;
pub mod statfit;

pub use error::{Error, Result};
pub use evt::{EvtFamily, EvtFit, LambdaMaxCurve, TwReference};
pub use geometry::{ScalarFit, ScalingCurve};
pub use ingest::{CleaningPolicy, CleaningReport, Format, RawPanel};
pub use pipeline::{compare, run, AnalysisReport, Analysis, RunConfig, RunError, Source};
pub use levy_walk::{SeriesKind, WalkConfig, WalkPath2D};
pub use returns::{EpochMatrix, PricePanel, ReturnPanel, TimeKey};
pub use spectra::{Spectrum, WishartMatrix};
pub use statfit::{Histogram, PsdEstimate, TDistFit, TailComparison, TailFit};
