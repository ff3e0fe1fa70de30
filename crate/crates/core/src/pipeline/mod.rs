//! End-to-end training, evaluation, cross-validation and synthetic data.

pub mod config;
pub mod crossval;
pub mod model;
pub mod report;
pub mod run;
pub mod synth;

pub use config::{PipelineConfig, SplitSpec};
pub use crossval::{run_crossval, CrossvalReport, Grid};
pub use model::{TrainedModel, MODEL_FORMAT};
pub use report::{EvalReport, Prediction};
pub use run::{
    evaluate_on, extract_training, fit_classifier, run_evaluate, run_train, select_patterns,
    train_on, write_eval, Timings, TrainArtifacts,
};
pub use synth::{generate_sequences, generate_synthetic, SynthSpec};
