//! Augmentation: per-curve transforms, minority oversampling, and the
//! pipeline that composes them.

mod fourier;
mod pipeline;
mod savgol;
mod scale;
mod smote;

pub use fourier::fourier_perturb;
pub use pipeline::{run_pipeline, transform_only, AugmentMode, PipelineConfig, Step};
pub use savgol::{savgol_coefficients, savgol_filter};
pub use scale::{minmax_normalize, quantile_sorted, robust_scale, RobustStats};
pub use smote::{interpolate, minority_neighbors, smote, smote_plan, SmoteDraw};
