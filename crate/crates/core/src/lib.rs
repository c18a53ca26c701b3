//! Transit detection over stellar flux time series.
//!
//! The crate is organised the way an experiment flows:
//!
//! - [`ingest`] loads and validates the labelled flux CSV and splits it.
//! - [`augment`] holds the per-curve transforms (Savitzky-Golay smoothing,
//!   min-max normalisation, robust scaling, Fourier jitter) and SMOTE, plus a
//!   seeded pipeline that composes them.
//! - [`models`] implements logistic regression, k-nearest neighbours and a
//!   random forest behind one fit/predict contract, with a binary model codec.
//! - [`eval`] computes confusion matrices, metrics and comparison tables.
//! - [`synth`] generates box-transit light curves for fixtures and demos.
//!
//! Every randomised operation takes an explicit seed. Sub-streams are derived
//! per row, sample or tree with [`seed::derive_seed`], so results do not depend
//! on how many rayon threads happen to be available.

pub mod augment;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod models;
pub mod seed;
pub mod synth;

mod linalg;

pub use error::{Error, Result};
pub use ingest::{ClassCounts, LabeledDataset, LightCurve, SplitIndices};
