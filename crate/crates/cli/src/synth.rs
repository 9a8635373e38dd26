//! Synthetic dataset fixture with a planted anomaly rule.
//!
//! `feature_0` is the single informative column: rows with a positive value
//! are labelled "attack", then 5% of labels are flipped as noise. The other
//! columns cycle through numeric, categorical, and boolean kinds so the
//! whole preprocessing pipeline gets exercised. Deterministic per seed,
//! byte for byte.

use std::path::{Path, PathBuf};

use anyhow::Context;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use fedids::dataio::{ColumnKind, ColumnRole, ColumnSpec, SchemaConfig};

const LABEL_NOISE: f64 = 0.05;
const CATEGORIES: [&str; 3] = ["alpha", "beta", "gamma"];

fn column_kind(index: usize) -> ColumnKind {
    match index % 3 {
        1 => ColumnKind::Numeric,
        2 => ColumnKind::CategoricalOnehot,
        _ => ColumnKind::Boolean,
    }
}

/// The schema describing a generated dataset of width `d`.
pub fn synthetic_schema(d: usize) -> SchemaConfig {
    let mut columns = vec![ColumnSpec {
        name: "feature_0".into(),
        kind: ColumnKind::Numeric,
        role: ColumnRole::Feature,
    }];
    for i in 1..d {
        columns.push(ColumnSpec {
            name: format!("feature_{i}"),
            kind: column_kind(i),
            role: ColumnRole::Feature,
        });
    }
    columns.push(ColumnSpec {
        name: "label".into(),
        kind: ColumnKind::CategoricalOrdinal,
        role: ColumnRole::Label,
    });
    SchemaConfig {
        columns,
        label_positive_values: std::iter::once("attack".to_string()).collect(),
        max_onehot_cardinality: 128,
    }
}

/// Writes the dataset CSV and its schema JSON; returns the schema path.
pub fn generate_synthetic(
    csv_path: &Path,
    n_samples: usize,
    d: usize,
    seed: u64,
) -> anyhow::Result<PathBuf> {
    anyhow::ensure!(n_samples >= 10, "n_samples must be at least 10, got {n_samples}");
    anyhow::ensure!(d >= 2, "d must be at least 2, got {d}");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let standard = Normal::new(0.0, 1.0).expect("unit normal is valid");

    if let Some(parent) = csv_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    let mut writer = csv::Writer::from_path(csv_path)
        .with_context(|| format!("cannot create {}", csv_path.display()))?;
    let mut header: Vec<String> = (0..d).map(|i| format!("feature_{i}")).collect();
    header.push("label".into());
    writer.write_record(&header)?;

    let mut record: Vec<String> = Vec::with_capacity(d + 1);
    for _ in 0..n_samples {
        record.clear();
        let informative: f64 = standard.sample(&mut rng);
        record.push(informative.to_string());
        for i in 1..d {
            let cell = match column_kind(i) {
                ColumnKind::Numeric => standard.sample(&mut rng).to_string(),
                ColumnKind::CategoricalOnehot => {
                    CATEGORIES[rng.gen_range(0..CATEGORIES.len())].to_string()
                }
                _ => if rng.gen_bool(0.5) { "yes" } else { "no" }.to_string(),
            };
            record.push(cell);
        }
        let mut anomalous = informative > 0.0;
        if rng.gen_bool(LABEL_NOISE) {
            anomalous = !anomalous;
        }
        record.push(if anomalous { "attack" } else { "normal" }.to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;

    let schema = synthetic_schema(d);
    let schema_path = schema_path_for(csv_path);
    let text = serde_json::to_string_pretty(&schema).expect("schema serializes");
    std::fs::write(&schema_path, text + "\n")
        .with_context(|| format!("cannot write {}", schema_path.display()))?;
    Ok(schema_path)
}

/// `data.csv` gets its schema at `data.schema.json`.
pub fn schema_path_for(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("schema.json")
}
