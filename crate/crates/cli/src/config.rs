//! Experiment configuration: the JSON file format and its validation.
//!
//! A config is the complete recipe for an experiment; together with the
//! dataset bytes it determines every output file. Validation reports all
//! problems at once so a config can be fixed in a single pass.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fedids::fedsim::{FLConfig, StopRule};
use fedids::nn::AdamConfig;
use fedids::xai::ShapMethod;

/// Which experiment the config describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Federated,
    Centralized,
    Sweep,
}

/// Training parameters shared by the federated and centralized drivers.
/// The centralized driver reads `max_rounds` as its epoch budget and
/// ignores the client-shape fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FederatedSection {
    #[serde(default = "default_one")]
    pub n_clients: usize,
    #[serde(default = "default_one_f64")]
    pub fraction_fit: f64,
    #[serde(default = "default_one")]
    pub local_epochs: usize,
    pub max_rounds: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default = "default_stop")]
    pub stop: StopRule,
    #[serde(default)]
    pub target_accuracy: Option<f64>,
}

/// Axes of the cartesian parameter sweep. A missing axis holds the value
/// from the `federated` section fixed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepSection {
    #[serde(default)]
    pub clients: Option<Vec<usize>>,
    #[serde(default)]
    pub fraction_fit: Option<Vec<f64>>,
    #[serde(default)]
    pub local_epochs: Option<Vec<usize>>,
}

/// Shapley explanation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainSection {
    #[serde(default = "default_method")]
    pub method: ShapMethod,
    /// Training rows sampled as the background set.
    #[serde(default = "default_background_rows")]
    pub background_rows: usize,
    /// Upper bound on explained test instances.
    #[serde(default = "default_max_instances")]
    pub max_instances: usize,
}

impl Default for ExplainSection {
    fn default() -> Self {
        ExplainSection {
            method: default_method(),
            background_rows: default_background_rows(),
            max_instances: default_max_instances(),
        }
    }
}

/// One experiment, declaratively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// CSV dataset path.
    pub dataset: PathBuf,
    /// Schema JSON path describing the dataset's columns.
    pub schema: PathBuf,
    /// Hidden layer widths; the input width comes from preprocessing.
    pub hidden_units: Vec<usize>,
    pub mode: Mode,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    pub federated: FederatedSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explain: Option<ExplainSection>,
    pub output_dir: PathBuf,
    pub seed: u64,
}

fn default_one() -> usize {
    1
}

fn default_one_f64() -> f64 {
    1.0
}

fn default_batch_size() -> usize {
    32
}

fn default_stop() -> StopRule {
    StopRule::FixedRounds
}

fn default_test_fraction() -> f64 {
    0.2
}

fn default_method() -> ShapMethod {
    ShapMethod::Sampled { n_permutations: 200 }
}

fn default_background_rows() -> usize {
    100
}

fn default_max_instances() -> usize {
    500
}

/// Every problem found in a config, reported together.
#[derive(Debug)]
pub struct ConfigError {
    pub problems: Vec<String>,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for (i, problem) in self.problems.iter().enumerate() {
            if i + 1 < self.problems.len() {
                writeln!(f, "  - {problem}")?;
            } else {
                write!(f, "  - {problem}")?;
            }
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("cannot parse config {}: {e}", path.display()))?;
        Ok(config)
    }

    /// Checks every field and reports all violations at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();

        if self.hidden_units.is_empty() {
            problems.push("hidden_units must list at least one layer width".into());
        }
        for (i, &units) in self.hidden_units.iter().enumerate() {
            if units == 0 {
                problems.push(format!("hidden_units[{i}] must be positive"));
            }
        }
        if !self.test_fraction.is_finite()
            || self.test_fraction <= 0.0
            || self.test_fraction >= 1.0
        {
            problems.push(format!(
                "test_fraction {} must lie strictly between 0 and 1",
                self.test_fraction
            ));
        }

        let fed = &self.federated;
        if fed.n_clients == 0 {
            problems.push("federated.n_clients must be at least 1".into());
        }
        if !fed.fraction_fit.is_finite() || fed.fraction_fit <= 0.0 || fed.fraction_fit > 1.0 {
            problems.push(format!(
                "federated.fraction_fit {} must lie in (0, 1]",
                fed.fraction_fit
            ));
        }
        if fed.local_epochs == 0 {
            problems.push("federated.local_epochs must be at least 1".into());
        }
        if fed.max_rounds == 0 {
            problems.push("federated.max_rounds must be at least 1".into());
        }
        if fed.batch_size == 0 {
            problems.push("federated.batch_size must be at least 1".into());
        }
        if let Some(target) = fed.target_accuracy {
            if !target.is_finite() || target <= 0.0 || target > 1.0 {
                problems.push(format!(
                    "federated.target_accuracy {target} must lie in (0, 1]"
                ));
            }
        }
        if let StopRule::Converge { min_delta, patience, .. } = fed.stop {
            if !min_delta.is_finite() || min_delta < 0.0 {
                problems.push(format!("federated.stop.min_delta {min_delta} must be >= 0"));
            }
            if patience == 0 {
                problems.push("federated.stop.patience must be at least 1".into());
            }
        }
        let adam = &fed.adam;
        if !adam.alpha.is_finite() || adam.alpha <= 0.0 {
            problems.push(format!("federated.adam.alpha {} must be positive", adam.alpha));
        }
        for (name, beta) in [("beta1", adam.beta1), ("beta2", adam.beta2)] {
            if !beta.is_finite() || !(0.0..1.0).contains(&beta) {
                problems.push(format!("federated.adam.{name} {beta} must lie in [0, 1)"));
            }
        }
        if !adam.epsilon.is_finite() || adam.epsilon <= 0.0 {
            problems.push(format!("federated.adam.epsilon {} must be positive", adam.epsilon));
        }

        match (self.mode, &self.sweep) {
            (Mode::Sweep, None) => {
                problems.push("sweep mode requires a sweep section with at least one axis".into());
            }
            (Mode::Sweep, Some(sweep)) => {
                if sweep.clients.is_none()
                    && sweep.fraction_fit.is_none()
                    && sweep.local_epochs.is_none()
                {
                    problems.push("sweep section must declare at least one axis".into());
                }
                if let Some(clients) = &sweep.clients {
                    if clients.is_empty() {
                        problems.push("sweep.clients axis is empty".into());
                    }
                    if clients.contains(&0) {
                        problems.push("sweep.clients entries must be at least 1".into());
                    }
                    if has_duplicates(clients) {
                        problems.push("sweep.clients contains duplicate entries".into());
                    }
                }
                if let Some(fractions) = &sweep.fraction_fit {
                    if fractions.is_empty() {
                        problems.push("sweep.fraction_fit axis is empty".into());
                    }
                    for &fr in fractions {
                        if !fr.is_finite() || fr <= 0.0 || fr > 1.0 {
                            problems
                                .push(format!("sweep.fraction_fit entry {fr} must lie in (0, 1]"));
                        }
                    }
                    if has_duplicates(&fractions.iter().map(|f| f.to_bits()).collect::<Vec<_>>()) {
                        problems.push("sweep.fraction_fit contains duplicate entries".into());
                    }
                }
                if let Some(epochs) = &sweep.local_epochs {
                    if epochs.is_empty() {
                        problems.push("sweep.local_epochs axis is empty".into());
                    }
                    if epochs.contains(&0) {
                        problems.push("sweep.local_epochs entries must be at least 1".into());
                    }
                    if has_duplicates(epochs) {
                        problems.push("sweep.local_epochs contains duplicate entries".into());
                    }
                }
            }
            (_, Some(_)) => {
                problems.push("sweep axes are only valid in sweep mode".into());
            }
            (_, None) => {}
        }

        if let Some(explain) = &self.explain {
            if explain.background_rows == 0 {
                problems.push("explain.background_rows must be at least 1".into());
            }
            if explain.max_instances == 0 {
                problems.push("explain.max_instances must be at least 1".into());
            }
            if let ShapMethod::Sampled { n_permutations: 0 } = explain.method {
                problems.push("explain.method.n_permutations must be at least 1".into());
            }
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { problems })
        }
    }

    /// The core training configuration for this experiment at `seed`.
    pub fn fl_config(&self, n_clients: usize, fraction_fit: f64, local_epochs: usize, seed: u64) -> FLConfig {
        FLConfig {
            n_clients,
            fraction_fit,
            local_epochs,
            max_rounds: self.federated.max_rounds,
            batch_size: self.federated.batch_size,
            adam: self.federated.adam,
            stop: self.federated.stop,
            target_accuracy: self.federated.target_accuracy,
            seed,
        }
    }

    pub fn base_fl_config(&self) -> FLConfig {
        self.fl_config(
            self.federated.n_clients,
            self.federated.fraction_fit,
            self.federated.local_epochs,
            self.seed,
        )
    }
}

fn has_duplicates<T: Ord + Copy>(values: &[T]) -> bool {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).any(|w| w[0] == w[1])
}
