//! Federated and centralized experiment drivers.

use std::time::Instant;

use ndarray::ArrayView2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataio::ClientPartition;
use crate::metrics::{classification_metrics, confusion, roc_auc, ConfusionMatrix};
use crate::nn::{bce_loss, forward, init_model, AdamState, Architecture, ModelParams};
use crate::seeding::{client_train_seed, init_seed};

use super::round::{aggregate_fedavg, client_update, select_clients};
use super::{ConvergeMetric, FLConfig, FedError, RoundLog, RunMode, RunReport, StopRule};

/// Held-out metrics for one model snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalMetrics {
    pub loss: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    pub confusion: ConfusionMatrix,
}

/// Scores a model on a labelled set: mean BCE, threshold-0.5 confusion
/// metrics, and ROC-AUC over the raw probabilities.
pub fn evaluate_model(
    params: &ModelParams,
    features: ArrayView2<f64>,
    labels: &[u8],
) -> Result<EvalMetrics, FedError> {
    let probs = forward(params, features)?;
    let probs = probs.as_slice().expect("forward output is contiguous");
    let loss = bce_loss(probs, labels)?;
    let preds: Vec<u8> = probs.iter().map(|&p| u8::from(p >= 0.5)).collect();
    let cm = confusion(labels, &preds)?;
    let cls = classification_metrics(&cm)?;
    let auc = roc_auc(probs, labels)?;
    Ok(EvalMetrics {
        loss,
        accuracy: cls.accuracy,
        precision: cls.precision,
        recall: cls.recall,
        f1: cls.f1,
        auc,
        confusion: cm,
    })
}

/// Early-stopping bookkeeping shared by both drivers.
struct StopTracker {
    target_accuracy: Option<f64>,
    rule: StopRule,
    best: f64,
    best_round: usize,
    stall: usize,
}

enum StopDecision {
    Continue,
    /// (rounds_to_convergence) for a run that met its stop condition.
    Stop(usize),
}

impl StopTracker {
    fn new(cfg: &FLConfig) -> Self {
        StopTracker {
            target_accuracy: cfg.target_accuracy,
            rule: cfg.stop,
            best: f64::NEG_INFINITY,
            best_round: 0,
            stall: 0,
        }
    }

    /// Feeds one round's held-out metrics; call with rounds 1, 2, ...
    fn observe(&mut self, round: usize, accuracy: f64, loss: f64) -> StopDecision {
        if let Some(target) = self.target_accuracy {
            if accuracy >= target {
                return StopDecision::Stop(round);
            }
        }
        match self.rule {
            StopRule::FixedRounds => StopDecision::Continue,
            StopRule::Converge { metric, min_delta, patience } => {
                let value = match metric {
                    ConvergeMetric::Accuracy => accuracy,
                    ConvergeMetric::Loss => -loss,
                };
                if self.best_round == 0 || value > self.best + min_delta {
                    self.best = value;
                    self.best_round = round;
                    self.stall = 0;
                    StopDecision::Continue
                } else {
                    self.stall += 1;
                    if self.stall >= patience {
                        StopDecision::Stop(self.best_round)
                    } else {
                        StopDecision::Continue
                    }
                }
            }
        }
    }
}

fn check_widths(
    arch: &Architecture,
    partitions: &[ClientPartition],
    test_features: ArrayView2<f64>,
) -> Result<(), FedError> {
    for p in partitions {
        if p.features.ncols() != arch.input_dim {
            return Err(FedError::WidthMismatch {
                expected: arch.input_dim,
                got: p.features.ncols(),
            });
        }
    }
    if test_features.ncols() != arch.input_dim {
        return Err(FedError::WidthMismatch {
            expected: arch.input_dim,
            got: test_features.ncols(),
        });
    }
    Ok(())
}

/// Runs federated averaging for up to `cfg.max_rounds` communication rounds.
///
/// Round r draws its client subset from `selection_seed(cfg.seed, r)` and
/// trains client c with `client_train_seed(cfg.seed, r, c)`, so a report is
/// a pure function of the configuration and the data. Selected clients train
/// in parallel; aggregation orders updates by client id, which keeps the
/// result independent of scheduling.
pub fn run_federated(
    cfg: &FLConfig,
    arch: &Architecture,
    partitions: &[ClientPartition],
    test_features: ArrayView2<f64>,
    test_labels: &[u8],
) -> Result<RunReport, FedError> {
    cfg.validate()?;
    arch.validate()?;
    if partitions.len() != cfg.n_clients {
        return Err(FedError::PartitionCount { expected: cfg.n_clients, got: partitions.len() });
    }
    check_widths(arch, partitions, test_features)?;

    let mut global = init_model(arch, init_seed(cfg.seed))?;
    let mut rounds: Vec<RoundLog> = Vec::with_capacity(cfg.max_rounds);
    let mut tracker = StopTracker::new(cfg);
    let mut converged = false;
    let mut rounds_to_convergence = 0;

    for round in 1..=cfg.max_rounds {
        let started = Instant::now();
        let selected = select_clients(cfg.n_clients, cfg.fraction_fit, cfg.seed, round);
        let updates = selected
            .par_iter()
            .map(|&cid| {
                let part = &partitions[cid];
                client_update(
                    &global,
                    cid,
                    part.features.view(),
                    &part.labels,
                    cfg.local_epochs,
                    cfg.batch_size,
                    &cfg.adam,
                    client_train_seed(cfg.seed, round, cid),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        global = aggregate_fedavg(&updates)?;

        let eval = evaluate_model(&global, test_features, test_labels)?;
        rounds.push(RoundLog {
            round,
            selected_clients: selected,
            test_loss: eval.loss,
            accuracy: eval.accuracy,
            precision: eval.precision,
            recall: eval.recall,
            f1: eval.f1,
            auc: eval.auc,
            confusion: eval.confusion,
            wall_time_ms: started.elapsed().as_millis(),
        });

        if let StopDecision::Stop(at) = tracker.observe(round, eval.accuracy, eval.loss) {
            converged = true;
            rounds_to_convergence = at;
            break;
        }
    }

    if !converged {
        rounds_to_convergence = rounds.len();
    }
    Ok(RunReport {
        mode: RunMode::Federated,
        rounds,
        rounds_to_convergence,
        converged,
        final_params: global,
    })
}

/// Trains one model on the pooled data, evaluating after every epoch.
///
/// The epoch budget is `cfg.max_rounds`, so one centralized "round" is one
/// pass over the training set; `cfg.local_epochs` is ignored. Initialization
/// and the shuffle stream reuse the derivations of a single-client federated
/// round (round 1, client 0), and the optimizer state persists across
/// epochs. A federated run with one client, full participation, and one
/// round of E local epochs therefore reproduces this driver's parameters
/// after E epochs bit for bit.
pub fn run_centralized(
    cfg: &FLConfig,
    arch: &Architecture,
    train_features: ArrayView2<f64>,
    train_labels: &[u8],
    test_features: ArrayView2<f64>,
    test_labels: &[u8],
) -> Result<RunReport, FedError> {
    cfg.validate()?;
    arch.validate()?;
    if train_features.ncols() != arch.input_dim {
        return Err(FedError::WidthMismatch {
            expected: arch.input_dim,
            got: train_features.ncols(),
        });
    }
    check_widths(arch, &[], test_features)?;

    let mut params = init_model(arch, init_seed(cfg.seed))?;
    let mut state = AdamState::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(client_train_seed(cfg.seed, 1, 0));
    let mut rounds: Vec<RoundLog> = Vec::with_capacity(cfg.max_rounds);
    let mut tracker = StopTracker::new(cfg);
    let mut converged = false;
    let mut rounds_to_convergence = 0;

    for epoch in 1..=cfg.max_rounds {
        let started = Instant::now();
        crate::nn::train_single_epoch(
            &mut params,
            &mut state,
            train_features,
            train_labels,
            cfg.batch_size,
            &cfg.adam,
            &mut rng,
        )?;

        let eval = evaluate_model(&params, test_features, test_labels)?;
        rounds.push(RoundLog {
            round: epoch,
            selected_clients: Vec::new(),
            test_loss: eval.loss,
            accuracy: eval.accuracy,
            precision: eval.precision,
            recall: eval.recall,
            f1: eval.f1,
            auc: eval.auc,
            confusion: eval.confusion,
            wall_time_ms: started.elapsed().as_millis(),
        });

        if let StopDecision::Stop(at) = tracker.observe(epoch, eval.accuracy, eval.loss) {
            converged = true;
            rounds_to_convergence = at;
            break;
        }
    }

    if !converged {
        rounds_to_convergence = rounds.len();
    }
    Ok(RunReport {
        mode: RunMode::Centralized,
        rounds,
        rounds_to_convergence,
        converged,
        final_params: params,
    })
}
