//! Multi-class SVM over bag-of-FLPs histograms.

mod kernel;
mod multiclass;
mod smo;

pub use kernel::{kernel, kernel_matrix};
pub use multiclass::{predict, train, PairModel, SvmConfig, SvmModel, TrainingReport};
pub use smo::{solve, SmoSolution};
