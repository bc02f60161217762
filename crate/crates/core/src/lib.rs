//! Gradient boosted decision trees for classification, with a hyperparameter
//! tuning and statistical benchmarking harness.
//!
//! The crate is organised bottom-up:
//!
//! - [`data`]: datasets, CSV ingestion, ordered target encoding, TF-IDF and
//!   stratified fold planning.
//! - [`tree`]: the regression tree base learner (exact and histogram split
//!   search, depth-wise / leaf-wise / oblivious growth, gamma pruning).
//! - [`boost`]: the log-loss boosting loop with subsampling, GOSS and
//!   one-vs-rest multiclass.
//! - [`metrics`]: accuracy, F1, AUC and log loss.
//! - [`stats`]: Wilcoxon signed-ranks, Friedman ranks and the Nemenyi
//!   critical difference.
//! - [`tune`]: search spaces, randomized search and TPE.
//! - [`bench`]: nested cross-validation experiments and report emission.

pub mod bench;
pub mod boost;
pub mod data;
mod error;
pub mod metrics;
pub mod seed;
pub mod stats;
pub mod tree;
pub mod tune;

pub use error::{Error, Result};
