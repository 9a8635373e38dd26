//! Federated averaging over horizontally partitioned clients.
//!
//! Each round selects a client subset, trains local copies of the global
//! model, and replaces the global parameters with the sample-weighted mean
//! of the returned updates. A centralized driver with the same evaluation
//! loop serves as the comparison baseline.

mod report;
mod round;
mod run;

pub use report::{report_json, write_report_json, write_rounds_csv};
pub use round::{aggregate_fedavg, client_update, select_clients, ClientUpdate};
pub use run::{evaluate_model, run_centralized, run_federated, EvalMetrics};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{ConfusionMatrix, MetricsError};
use crate::nn::{AdamConfig, ModelParams, NnError};

#[derive(Debug, Error)]
pub enum FedError {
    #[error("invalid federated configuration: {0}")]
    Config(String),
    #[error("expected {expected} client partitions, got {got}")]
    PartitionCount { expected: usize, got: usize },
    #[error("data has {got} feature columns, architecture expects {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("no client updates to aggregate")]
    EmptyUpdates,
    #[error("duplicate update from client {0}")]
    DuplicateClient(usize),
    #[error("update from client {client} has a different parameter shape")]
    ArchMismatch { client: usize },
    #[error("update from client {client} reports zero samples")]
    ZeroSampleCount { client: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("report i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("report csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("report json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Metric watched by the early-stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergeMetric {
    Accuracy,
    Loss,
}

/// When to stop a run before `max_rounds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StopRule {
    /// Always run exactly `max_rounds` rounds.
    FixedRounds,
    /// Stop once the watched metric has failed to improve by at least
    /// `min_delta` for `patience` consecutive rounds.
    Converge { metric: ConvergeMetric, min_delta: f64, patience: usize },
}

/// Federated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FLConfig {
    /// Number of clients M holding partitions.
    pub n_clients: usize,
    /// Fraction of clients trained per round; the selected count is
    /// max(1, round(M * fraction_fit)).
    pub fraction_fit: f64,
    /// Local epochs E per selected client per round.
    pub local_epochs: usize,
    /// Round budget R.
    pub max_rounds: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default = "default_stop")]
    pub stop: StopRule,
    /// Optional accuracy threshold that ends the run as converged.
    #[serde(default)]
    pub target_accuracy: Option<f64>,
    pub seed: u64,
}

fn default_batch_size() -> usize {
    32
}

fn default_stop() -> StopRule {
    StopRule::FixedRounds
}

impl FLConfig {
    pub fn validate(&self) -> Result<(), FedError> {
        if self.n_clients == 0 {
            return Err(FedError::Config("n_clients must be at least 1".into()));
        }
        if !self.fraction_fit.is_finite() || self.fraction_fit <= 0.0 || self.fraction_fit > 1.0 {
            return Err(FedError::Config(format!(
                "fraction_fit {} must lie in (0, 1]",
                self.fraction_fit
            )));
        }
        if self.local_epochs == 0 {
            return Err(FedError::Config("local_epochs must be at least 1".into()));
        }
        if self.max_rounds == 0 {
            return Err(FedError::Config("max_rounds must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(FedError::Config("batch_size must be at least 1".into()));
        }
        if let Some(target) = self.target_accuracy {
            if !target.is_finite() || target <= 0.0 || target > 1.0 {
                return Err(FedError::Config(format!(
                    "target_accuracy {target} must lie in (0, 1]"
                )));
            }
        }
        if let StopRule::Converge { min_delta, patience, .. } = self.stop {
            if !min_delta.is_finite() || min_delta < 0.0 {
                return Err(FedError::Config(format!("min_delta {min_delta} must be >= 0")));
            }
            if patience == 0 {
                return Err(FedError::Config("patience must be at least 1".into()));
            }
        }
        Ok(())
    }
}

/// Log line for one communication round (or one centralized epoch).
///
/// Wall time is kept in memory only; serialized artifacts must be
/// byte-identical across reruns of the same seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundLog {
    pub round: usize,
    pub selected_clients: Vec<usize>,
    pub test_loss: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    pub confusion: ConfusionMatrix,
    #[serde(skip)]
    pub wall_time_ms: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Federated,
    Centralized,
}

/// Outcome of a full run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub mode: RunMode,
    pub rounds: Vec<RoundLog>,
    /// Round after which the watched metric last improved; equals the round
    /// count when no early-stopping rule fired.
    pub rounds_to_convergence: usize,
    /// True when a stop rule or accuracy target ended the run early.
    pub converged: bool,
    pub final_params: ModelParams,
}

impl RunReport {
    pub fn final_round(&self) -> &RoundLog {
        self.rounds.last().expect("a run always logs at least one round")
    }
}
