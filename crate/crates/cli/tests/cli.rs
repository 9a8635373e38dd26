//! End-to-end tests that drive the compiled `fedids` binary the way a user
//! would: generate data, run experiments, and check the files left behind.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fedids_cli::config::ExperimentConfig;
use serde_json::{json, Value};
use tempfile::tempdir;

fn fedids(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedids"))
        .args(args)
        .output()
        .expect("the fedids binary should spawn")
}

fn assert_success(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} should exit cleanly, stderr:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Generates a small synthetic dataset and returns (csv, schema) paths.
fn synth_into(dir: &Path, samples: usize, seed: u64) -> (PathBuf, PathBuf) {
    let csv = dir.join("data.csv");
    let out = fedids(&[
        "synth",
        "--out",
        csv.to_str().unwrap(),
        "--samples",
        &samples.to_string(),
        "--features",
        "4",
        "--seed",
        &seed.to_string(),
    ]);
    assert_success(&out, "synth");
    let schema = csv.with_extension("schema.json");
    assert!(schema.exists(), "synth should write a schema next to the csv");
    (csv, schema)
}

fn base_config(dataset: &Path, schema: &Path, out_dir: &Path) -> Value {
    json!({
        "dataset": dataset,
        "schema": schema,
        "hidden_units": [8],
        "mode": "federated",
        "test_fraction": 0.25,
        "federated": {
            "n_clients": 4,
            "fraction_fit": 1.0,
            "local_epochs": 2,
            "max_rounds": 4
        },
        "output_dir": out_dir,
        "seed": 11
    })
}

fn write_config(dir: &Path, config: &Value) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&read(path))
        .unwrap_or_else(|e| panic!("{} should hold valid JSON: {e}", path.display()))
}

#[test]
fn synth_writes_identical_bytes_for_the_same_seed() {
    let dir = tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for target in [&a, &b] {
        let out = fedids(&[
            "synth", "--out", target.to_str().unwrap(), "--samples", "400", "--seed", "3",
        ]);
        assert_success(&out, "synth");
    }
    let bytes_a = read(&a);
    assert_eq!(bytes_a, read(&b), "same seed should reproduce the dataset byte for byte");
    let text = String::from_utf8(bytes_a).unwrap();
    assert_eq!(text.lines().count(), 401, "400 samples plus a header row");
    assert!(
        text.starts_with("feature_0,"),
        "header should start with the informative column"
    );
}

#[test]
fn centralized_run_writes_report_rounds_and_model() {
    let dir = tempdir().unwrap();
    let (csv, schema) = synth_into(dir.path(), 400, 5);
    let out_dir = dir.path().join("out");
    let mut config = base_config(&csv, &schema, &out_dir);
    config["mode"] = json!("centralized");
    let config_path = write_config(dir.path(), &config);

    let out = fedids(&["run", "--config", config_path.to_str().unwrap()]);
    assert_success(&out, "centralized run");

    let report = read_json(&out_dir.join("report.json"));
    assert_eq!(report["mode"], "centralized");
    assert_eq!(report["rounds_run"], 4, "the epoch budget comes from max_rounds");
    assert!(
        report["final_metrics"]["accuracy"].as_f64().unwrap() > 0.5,
        "even four epochs should beat coin flipping on the planted rule"
    );

    let rounds = String::from_utf8(read(&out_dir.join("rounds.csv"))).unwrap();
    let mut lines = rounds.lines();
    assert_eq!(
        lines.next(),
        Some("round,selected_clients,test_loss,accuracy,precision,recall,f1,auc,tp,fp,tn,fn")
    );
    assert_eq!(lines.count(), 4, "one csv row per epoch");

    let model = read_json(&out_dir.join("model.json"));
    assert!(model["layers"].is_array(), "the checkpoint should list layers");
}

#[test]
fn federated_rerun_reproduces_artifacts_byte_for_byte() {
    let dir = tempdir().unwrap();
    let (csv, schema) = synth_into(dir.path(), 400, 9);
    let out_dir = dir.path().join("out");
    let config_path = write_config(dir.path(), &base_config(&csv, &schema, &out_dir));

    assert_success(&fedids(&["run", "--config", config_path.to_str().unwrap()]), "first run");
    let first: Vec<Vec<u8>> = ["report.json", "rounds.csv", "model.json"]
        .iter()
        .map(|name| read(&out_dir.join(name)))
        .collect();

    assert_success(&fedids(&["run", "--config", config_path.to_str().unwrap()]), "second run");
    for (name, bytes) in ["report.json", "rounds.csv", "model.json"].iter().zip(&first) {
        assert_eq!(
            &read(&out_dir.join(name)),
            bytes,
            "{name} should be reproduced byte for byte on rerun"
        );
    }
}

#[test]
fn run_rejects_invalid_config_and_names_the_field() {
    let dir = tempdir().unwrap();
    let (csv, schema) = synth_into(dir.path(), 50, 1);
    let mut config = base_config(&csv, &schema, &dir.path().join("out"));
    config["federated"]["fraction_fit"] = json!(0.0);
    config["federated"]["batch_size"] = json!(0);
    let config_path = write_config(dir.path(), &config);

    let out = fedids(&["run", "--config", config_path.to_str().unwrap()]);
    assert!(!out.status.success(), "an invalid config should fail the run");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("invalid configuration"), "stderr was: {stderr}");
    assert!(stderr.contains("federated.fraction_fit"), "stderr was: {stderr}");
    assert!(stderr.contains("federated.batch_size"), "stderr was: {stderr}");
    assert!(
        !dir.path().join("out").exists(),
        "a rejected run should not create the output directory"
    );
}

#[test]
fn sweep_writes_one_row_per_grid_point() {
    let dir = tempdir().unwrap();
    let (csv, schema) = synth_into(dir.path(), 400, 13);
    let out_dir = dir.path().join("out");
    let mut config = base_config(&csv, &schema, &out_dir);
    config["mode"] = json!("sweep");
    config["sweep"] = json!({ "clients": [2, 4] });
    let config_path = write_config(dir.path(), &config);

    let run = fedids(&["run", "--config", config_path.to_str().unwrap()]);
    assert!(!run.status.success(), "the run subcommand should refuse a sweep config");
    assert!(
        String::from_utf8_lossy(&run.stderr).contains("sweep subcommand"),
        "the refusal should point at the sweep subcommand"
    );

    assert_success(&fedids(&["sweep", "--config", config_path.to_str().unwrap()]), "sweep");
    let table = String::from_utf8(read(&out_dir.join("sweep.csv"))).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(
        lines[0],
        "n_clients,fraction_fit,local_epochs,seed,rounds_run,rounds_to_convergence,\
         converged,test_loss,accuracy,precision,recall,f1,auc"
    );
    assert_eq!(lines.len(), 3, "header plus one row per grid point");
    assert!(lines[1].starts_with("2,1,2,"), "rows follow axis order, got {}", lines[1]);
    assert!(lines[2].starts_with("4,1,2,"), "rows follow axis order, got {}", lines[2]);

    let fed_config = dir.path().join("federated.json");
    std::fs::write(
        &fed_config,
        serde_json::to_string_pretty(&base_config(&csv, &schema, &out_dir)).unwrap(),
    )
    .unwrap();
    let sweep_on_fed = fedids(&["sweep", "--config", fed_config.to_str().unwrap()]);
    assert!(
        !sweep_on_fed.status.success(),
        "the sweep subcommand should refuse a non-sweep config"
    );
}

#[test]
fn run_with_explain_exports_shap_tables_and_explain_subcommand_matches() {
    let dir = tempdir().unwrap();
    let (csv, schema) = synth_into(dir.path(), 400, 21);
    let out_dir = dir.path().join("out");
    let mut config = base_config(&csv, &schema, &out_dir);
    config["explain"] = json!({
        "method": { "method": "sampled", "n_permutations": 40 },
        "background_rows": 40,
        "max_instances": 25
    });
    let config_path = write_config(dir.path(), &config);

    assert_success(&fedids(&["run", "--config", config_path.to_str().unwrap()]), "run");

    let bar = String::from_utf8(read(&out_dir.join("shap_bar.csv"))).unwrap();
    let mut bar_lines = bar.lines();
    assert_eq!(bar_lines.next(), Some("feature,mean_abs_shap,rank"));
    let n_features = bar_lines.count();
    assert!(n_features >= 4, "one-hot encoding should widen four raw columns");

    let beeswarm = String::from_utf8(read(&out_dir.join("shap_beeswarm.csv"))).unwrap();
    let mut swarm_lines = beeswarm.lines();
    assert_eq!(swarm_lines.next(), Some("feature,shap_value,normalized_value,instance_id"));
    assert_eq!(
        swarm_lines.count(),
        n_features * 25,
        "one beeswarm point per feature and explained instance"
    );

    let explain_dir = dir.path().join("explain_out");
    let explain = fedids(&[
        "explain",
        "--config",
        config_path.to_str().unwrap(),
        "--checkpoint",
        out_dir.join("model.json").to_str().unwrap(),
        "--out",
        explain_dir.to_str().unwrap(),
    ]);
    assert_success(&explain, "explain");
    for name in ["shap_beeswarm.csv", "shap_bar.csv"] {
        assert_eq!(
            read(&explain_dir.join(name)),
            read(&out_dir.join(name)),
            "{name} from the saved checkpoint should match the in-run export"
        );
    }
}

#[test]
fn mode_and_seed_flags_override_the_config() {
    let dir = tempdir().unwrap();
    let (csv, schema) = synth_into(dir.path(), 400, 17);
    let out_dir = dir.path().join("out");
    let config_path = write_config(dir.path(), &base_config(&csv, &schema, &out_dir));

    let out = fedids(&[
        "run",
        "--config",
        config_path.to_str().unwrap(),
        "--mode",
        "centralized",
    ]);
    assert_success(&out, "run with --mode");
    let report = read_json(&out_dir.join("report.json"));
    assert_eq!(report["mode"], "centralized", "--mode should win over the config");
    assert_eq!(report["config"]["mode"], "centralized", "the echo reflects the override");
    let baseline_model = read(&out_dir.join("model.json"));

    let reseeded_dir = dir.path().join("reseeded");
    let out = fedids(&[
        "run",
        "--config",
        config_path.to_str().unwrap(),
        "--mode",
        "centralized",
        "--seed",
        "999",
        "--out",
        reseeded_dir.to_str().unwrap(),
    ]);
    assert_success(&out, "run with --seed");
    let reseeded = read_json(&reseeded_dir.join("report.json"));
    assert_eq!(reseeded["config"]["seed"], 999);
    assert_ne!(
        read(&reseeded_dir.join("model.json")),
        baseline_model,
        "a different seed should land on different weights"
    );
}

#[test]
fn report_embeds_a_config_echo_that_reparses() {
    let dir = tempdir().unwrap();
    let (csv, schema) = synth_into(dir.path(), 400, 29);
    let out_dir = dir.path().join("out");
    let config_path = write_config(dir.path(), &base_config(&csv, &schema, &out_dir));

    assert_success(&fedids(&["run", "--config", config_path.to_str().unwrap()]), "run");

    let loaded = ExperimentConfig::from_path(&config_path).unwrap();
    let report = read_json(&out_dir.join("report.json"));
    let echoed: ExperimentConfig =
        serde_json::from_value(report["config"].clone()).expect("the echo should reparse");
    assert_eq!(echoed, loaded, "the embedded config should equal the one on disk");
}
