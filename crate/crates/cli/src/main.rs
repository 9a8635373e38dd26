//! `fedids` command line entry point.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fedids_cli::config::{ExperimentConfig, Mode};
use fedids_cli::pipeline::{run_experiment, run_explain, run_sweep};
use fedids_cli::synth::generate_synthetic;

#[derive(Parser)]
#[command(
    name = "fedids",
    version,
    about = "Federated intrusion-detection experiment runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one federated or centralized experiment from a config file
    Run(RunArgs),
    /// Run the parameter sweep described by a config file
    Sweep(CommonArgs),
    /// Generate a synthetic dataset with a planted anomaly rule
    Synth(SynthArgs),
    /// Explain a saved model checkpoint on the config's dataset
    Explain(ExplainArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the experiment config JSON
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override the config's mode
    #[arg(long, value_enum)]
    mode: Option<ModeFlag>,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Path to a model checkpoint written by a previous run
    #[arg(long)]
    checkpoint: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Where to write the dataset CSV; the schema lands next to it
    #[arg(long)]
    out: PathBuf,
    /// Number of rows
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Number of feature columns
    #[arg(long, default_value_t = 5)]
    features: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeFlag {
    Federated,
    Centralized,
}

fn load_with_overrides(common: &CommonArgs) -> anyhow::Result<ExperimentConfig> {
    let mut config = ExperimentConfig::from_path(&common.config)?;
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(args) => {
            let mut config = load_with_overrides(&args.common)?;
            if let Some(mode) = args.mode {
                config.mode = match mode {
                    ModeFlag::Federated => Mode::Federated,
                    ModeFlag::Centralized => Mode::Centralized,
                };
            }
            anyhow::ensure!(
                config.mode != Mode::Sweep,
                "config mode is \"sweep\"; use the sweep subcommand or pass --mode"
            );
            run_experiment(&config)
        }
        Command::Sweep(common) => {
            let config = load_with_overrides(&common)?;
            anyhow::ensure!(
                config.mode == Mode::Sweep,
                "the sweep subcommand needs a config with mode \"sweep\""
            );
            run_sweep(&config)
        }
        Command::Synth(args) => {
            let schema_path = generate_synthetic(&args.out, args.samples, args.features, args.seed)?;
            println!(
                "wrote {} ({} rows, {} features) and {}",
                args.out.display(),
                args.samples,
                args.features,
                schema_path.display()
            );
            Ok(())
        }
        Command::Explain(args) => {
            let config = load_with_overrides(&args.common)?;
            run_explain(&config, &args.checkpoint)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
