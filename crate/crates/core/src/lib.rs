//! Nonlinear EEG complexity features and two-group classification.
//!
//! The crate covers the whole batch pipeline:
//!
//! * [`signal_io`]: recordings, CSV / raw-binary files, epoching
//! * [`features`]: Higuchi fractal dimension, sample entropy, feature vectors
//! * [`stats`]: feature matrices, z-scoring, correlation, PCA, group summaries
//! * [`classifiers`]: naive Bayes, logistic regression, SVM (SMO), MLP, C4.5
//!   tree, random forest
//! * [`evaluation`]: stratified K-fold CV, ROC AUC, report grids
//! * [`synth`]: Weierstrass and fBm generators, calibrated surrogate cohorts
//! * [`pipeline`]: config-driven orchestration used by the `ncx` binary

pub mod classifiers;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod pipeline;
pub mod signal_io;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
