//! Shapley-value explanations of a trained model.
//!
//! Coalition values are interventional: v(S) is the mean model output over a
//! background sample with the instance's values substituted for the features
//! in S. `shap_exact` enumerates every coalition and serves as the oracle
//! for `shap_sampled`, the permutation estimator used at real feature
//! counts. Aggregation and plot exports operate on the resulting matrix.

mod export;
mod shap;

pub use export::{
    bar_export, beeswarm_export, global_importance, write_bar_csv, write_beeswarm_csv, BarRow,
    BeeswarmRow, ShapMatrix,
};
pub use shap::{
    coalition_value, explain_set, shap_exact, shap_sampled, BackgroundSet, FnPredictor,
    Predictor, ShapMethod, ShapVector, EXACT_DIM_LIMIT,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum XaiError {
    #[error("exact mode enumerates 2^d coalitions and supports at most {limit} features, got {got}")]
    DimensionTooLarge { got: usize, limit: usize },
    #[error("background set must contain at least one row")]
    EmptyBackground,
    #[error("no instances to explain")]
    NoInstances,
    #[error("n_permutations must be at least 1")]
    ZeroPermutations,
    #[error("model expects {expected} features, data has {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("{names} feature names for width-{width} data")]
    NameCountMismatch { names: usize, width: usize },
    #[error("shap csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for XaiError {
    fn from(e: csv::Error) -> Self {
        XaiError::Csv(e.to_string())
    }
}

impl From<std::io::Error> for XaiError {
    fn from(e: std::io::Error) -> Self {
        XaiError::Csv(e.to_string())
    }
}
