//! Questionnaire-based autism screening toolkit.
//!
//! The crate covers the whole tabular pipeline used to turn AIIMS-modified
//! INDT-ASD (AMI) questionnaire exports into a deployable screening model:
//!
//! - [`data`]: the AMI schema, CSV ingestion, answer encoding, synthetic
//!   datasets and stratified train/test splits.
//! - [`preprocessing`]: z-score standardization followed by min-max scaling.
//! - [`selection`]: chi-squared, recursive feature elimination and PCA-loading
//!   selectors combined by an intersection vote, swept over several K.
//! - [`classifiers`]: eleven from-scratch binary classifiers behind one
//!   `fit` / `predict_proba` interface.
//! - [`model_selection`]: stratified K-fold plans and exhaustive grid search.
//! - [`evaluation`]: confusion matrices, accuracy/recall/precision/F1, log
//!   loss and ROC/AUC.
//! - [`artifact`], [`catalog`] and [`service`]: the versioned model file, the
//!   bilingual question catalog and the HTTP screening service.
//! - [`cli`]: the `ami-screen` command line (select, train, evaluate, predict,
//!   serve).
//!
//! Runnable walkthroughs for each capability live in the crate's `examples/`
//! directory.

// NaN-rejecting `!(x >= 0.0)` checks and index loops over small fixed
// dimensions are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod artifact;
pub mod catalog;
pub mod classifiers;
pub mod cli;
pub mod data;
pub mod evaluation;
pub mod linalg;
pub mod model_selection;
pub mod pipeline;
pub mod preprocessing;
pub mod rng;
pub mod selection;
pub mod service;

pub use artifact::ModelArtifact;
pub use classifiers::{ClassifierSpec, Family, TrainedClassifier};
pub use data::{Dataset, FeatureSpec, Schema};
pub use evaluation::{ConfusionMatrix, EvaluationReport};
pub use pipeline::{FittedPipeline, ScalingConfig};
