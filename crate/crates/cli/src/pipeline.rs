//! End-to-end experiment execution: data preparation, run drivers, sweep
//! tables, and explanation export.

use std::path::Path;

use anyhow::Context;
use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use fedids::dataio::{
    load_dataset, partition_clients, preprocess_apply, preprocess_fit, split_raw_stratified,
    PreparedDataset, SchemaConfig, TransformState,
};
use fedids::fedsim::{
    run_centralized, run_federated, write_report_json, write_rounds_csv, RunReport,
};
use fedids::nn::{load_checkpoint, save_checkpoint, Architecture, ModelParams};
use fedids::seeding::{background_seed, explain_sample_seed, mix, partition_seed};
use fedids::xai::{
    explain_set, write_bar_csv, write_beeswarm_csv, BackgroundSet, ShapMatrix,
};

use crate::config::{ExperimentConfig, ExplainSection, Mode};

/// Fitted train/test data for one experiment seed.
pub struct PreparedSplits {
    pub train: PreparedDataset,
    pub test: PreparedDataset,
    pub state: TransformState,
}

/// Loads, splits, and preprocesses the configured dataset. The split comes
/// first so the fitted encoders and scalers never see test rows.
pub fn prepare_data(config: &ExperimentConfig) -> anyhow::Result<PreparedSplits> {
    let schema = SchemaConfig::from_path(&config.schema)
        .with_context(|| format!("loading schema {}", config.schema.display()))?;
    let table = load_dataset(&config.dataset, &schema)
        .with_context(|| format!("loading dataset {}", config.dataset.display()))?;
    let (train_raw, test_raw) =
        split_raw_stratified(&table, &schema, config.test_fraction, config.seed)
            .context("splitting dataset")?;
    let (train, state) = preprocess_fit(&train_raw, &schema).context("fitting preprocessing")?;
    let test = preprocess_apply(&test_raw, &state).context("transforming test rows")?;
    Ok(PreparedSplits { train, test, state })
}

fn architecture_for(config: &ExperimentConfig, input_dim: usize) -> Architecture {
    Architecture { input_dim, hidden_units: config.hidden_units.clone() }
}

fn run_with_mode(
    config: &ExperimentConfig,
    splits: &PreparedSplits,
    arch: &Architecture,
) -> anyhow::Result<RunReport> {
    let fl = config.base_fl_config();
    let report = match config.mode {
        Mode::Federated => {
            let partitions =
                partition_clients(&splits.train, fl.n_clients, partition_seed(config.seed))
                    .context("partitioning clients")?;
            run_federated(&fl, arch, &partitions, splits.test.features.view(), &splits.test.labels)?
        }
        Mode::Centralized => run_centralized(
            &fl,
            arch,
            splits.train.features.view(),
            &splits.train.labels,
            splits.test.features.view(),
            &splits.test.labels,
        )?,
        Mode::Sweep => anyhow::bail!("sweep configs run through the sweep subcommand"),
    };
    Ok(report)
}

/// Runs one experiment and writes report.json, rounds.csv, model.json, and
/// (when explanation is enabled) the SHAP exports. Rerunning the same config
/// reproduces every file byte for byte.
pub fn run_experiment(config: &ExperimentConfig) -> anyhow::Result<()> {
    config.validate()?;
    std::fs::create_dir_all(&config.output_dir)
        .with_context(|| format!("creating {}", config.output_dir.display()))?;

    let splits = prepare_data(config)?;
    let arch = architecture_for(config, splits.train.features.ncols());
    let report = run_with_mode(config, &splits, &arch)?;

    let out = &config.output_dir;
    write_report_json(&out.join("report.json"), &report, config)?;
    write_rounds_csv(&out.join("rounds.csv"), &report.rounds)?;
    save_checkpoint(&out.join("model.json"), &report.final_params)?;

    if let Some(explain) = &config.explain {
        write_explanations(config, explain, &splits, &report.final_params)?;
    }

    let last = report.final_round();
    println!(
        "{} run: {} rounds, accuracy {:.4}, f1 {:.4}, auc {:.4} -> {}",
        match config.mode {
            Mode::Federated => "federated",
            Mode::Centralized => "centralized",
            Mode::Sweep => unreachable!("rejected above"),
        },
        report.rounds.len(),
        last.accuracy,
        last.f1,
        last.auc,
        out.display()
    );
    Ok(())
}

/// One sweep row: the axis point, its derived seed, and the run outcome.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub n_clients: usize,
    pub fraction_fit: f64,
    pub local_epochs: usize,
    pub seed: u64,
    pub rounds_run: usize,
    pub rounds_to_convergence: usize,
    pub converged: bool,
    pub test_loss: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
}

/// Seed for one sweep row, derived from the axis values alone so adding
/// points to an axis never changes existing rows.
pub fn sweep_row_seed(base: u64, n_clients: usize, fraction_fit: f64, local_epochs: usize) -> u64 {
    let salted = mix(base, 0x0053_5745_4550);
    mix(mix(mix(salted, n_clients as u64), fraction_fit.to_bits()), local_epochs as u64)
}

/// Runs the cartesian product of the configured axes, one federated run per
/// combination, and writes sweep.csv. Rows execute in parallel; the table
/// is written in axis order regardless of completion order.
pub fn run_sweep(config: &ExperimentConfig) -> anyhow::Result<()> {
    config.validate()?;
    let sweep = config.sweep.as_ref().expect("validated: sweep mode has a sweep section");
    std::fs::create_dir_all(&config.output_dir)
        .with_context(|| format!("creating {}", config.output_dir.display()))?;

    let clients_axis =
        sweep.clients.clone().unwrap_or_else(|| vec![config.federated.n_clients]);
    let fraction_axis =
        sweep.fraction_fit.clone().unwrap_or_else(|| vec![config.federated.fraction_fit]);
    let epochs_axis =
        sweep.local_epochs.clone().unwrap_or_else(|| vec![config.federated.local_epochs]);

    let mut combos = Vec::new();
    for &m in &clients_axis {
        for &fr in &fraction_axis {
            for &e in &epochs_axis {
                combos.push((m, fr, e));
            }
        }
    }

    let splits = prepare_data(config)?;
    let arch = architecture_for(config, splits.train.features.ncols());

    let rows: Vec<SweepRow> = combos
        .par_iter()
        .map(|&(m, fr, e)| -> anyhow::Result<SweepRow> {
            let seed = sweep_row_seed(config.seed, m, fr, e);
            let fl = config.fl_config(m, fr, e, seed);
            let partitions = partition_clients(&splits.train, m, partition_seed(seed))
                .with_context(|| format!("partitioning {m} clients"))?;
            let report = run_federated(
                &fl,
                &arch,
                &partitions,
                splits.test.features.view(),
                &splits.test.labels,
            )
            .with_context(|| format!("sweep row M={m} Fr={fr} E={e}"))?;
            let last = report.final_round();
            Ok(SweepRow {
                n_clients: m,
                fraction_fit: fr,
                local_epochs: e,
                seed,
                rounds_run: report.rounds.len(),
                rounds_to_convergence: report.rounds_to_convergence,
                converged: report.converged,
                test_loss: last.test_loss,
                accuracy: last.accuracy,
                precision: last.precision,
                recall: last.recall,
                f1: last.f1,
                auc: last.auc,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let path = config.output_dir.join("sweep.csv");
    write_sweep_csv(&path, &rows)?;
    println!("sweep: {} rows -> {}", rows.len(), path.display());
    Ok(())
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "n_clients",
        "fraction_fit",
        "local_epochs",
        "seed",
        "rounds_run",
        "rounds_to_convergence",
        "converged",
        "test_loss",
        "accuracy",
        "precision",
        "recall",
        "f1",
        "auc",
    ])?;
    for r in rows {
        w.write_record([
            r.n_clients.to_string(),
            r.fraction_fit.to_string(),
            r.local_epochs.to_string(),
            r.seed.to_string(),
            r.rounds_run.to_string(),
            r.rounds_to_convergence.to_string(),
            r.converged.to_string(),
            r.test_loss.to_string(),
            r.accuracy.to_string(),
            r.precision.to_string(),
            r.recall.to_string(),
            r.f1.to_string(),
            r.auc.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Seeded subsample of at most `max_rows` rows, order preserved.
fn sample_rows(features: ArrayView2<f64>, max_rows: usize, seed: u64) -> Array2<f64> {
    let n = features.nrows();
    if n <= max_rows {
        return features.to_owned();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, max_rows).into_vec();
    picked.sort_unstable();
    features.select(Axis(0), &picked)
}

/// Explains the model on a seeded sample of test instances and writes
/// shap_beeswarm.csv and shap_bar.csv.
pub fn write_explanations(
    config: &ExperimentConfig,
    explain: &ExplainSection,
    splits: &PreparedSplits,
    params: &ModelParams,
) -> anyhow::Result<()> {
    let background = BackgroundSet::sample(
        splits.train.features.view(),
        explain.background_rows,
        background_seed(config.seed),
    )?;
    let instances = sample_rows(
        splits.test.features.view(),
        explain.max_instances,
        explain_sample_seed(config.seed),
    );
    let vectors =
        explain_set(params, instances.view(), &background, explain.method, config.seed)?;
    let matrix =
        ShapMatrix::new(splits.train.feature_names.clone(), vectors, instances.view())?;
    let out = &config.output_dir;
    write_beeswarm_csv(&out.join("shap_beeswarm.csv"), &matrix)?;
    write_bar_csv(&out.join("shap_bar.csv"), &matrix)?;
    println!(
        "explained {} instances over {} features -> {}",
        matrix.n_instances(),
        matrix.n_features(),
        out.display()
    );
    Ok(())
}

/// Explains a saved checkpoint against the config's dataset, re-deriving
/// the preprocessing deterministically from the config seed.
pub fn run_explain(config: &ExperimentConfig, checkpoint: &Path) -> anyhow::Result<()> {
    config.validate()?;
    std::fs::create_dir_all(&config.output_dir)
        .with_context(|| format!("creating {}", config.output_dir.display()))?;

    let splits = prepare_data(config)?;
    let params = load_checkpoint(checkpoint)
        .with_context(|| format!("loading checkpoint {}", checkpoint.display()))?;
    let width = splits.train.features.ncols();
    let model_width = params.architecture().input_dim;
    anyhow::ensure!(
        model_width == width,
        "checkpoint expects {model_width} features but the prepared dataset has {width}; \
         the config must match the one that trained the model"
    );
    let explain = config.explain.clone().unwrap_or_default();
    write_explanations(config, &explain, &splits, &params)
}
