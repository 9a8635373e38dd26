//! Federated intrusion-detection experiment engine.
//!
//! The crate trains dense binary classifiers on horizontally partitioned
//! tabular flow data with FedAvg, evaluates them against a centralized
//! baseline, and explains the resulting global model with Shapley values.
//!
//! Modules:
//! - [`dataio`]: CSV loading, schema-driven preprocessing, splits, client partitions
//! - [`nn`]: dense binary classifier with manual backprop and Adam
//! - [`fedsim`]: client selection, local updates, FedAvg aggregation, run drivers
//! - [`metrics`]: confusion-matrix metrics and ROC-AUC
//! - [`xai`]: exact and permutation-sampled Shapley explanations with exports

pub mod dataio;
pub mod fedsim;
pub mod metrics;
pub mod nn;
pub mod seeding;
pub mod xai;
