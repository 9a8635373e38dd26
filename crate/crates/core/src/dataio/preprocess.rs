//! Schema-driven preprocessing with a fit/replay split.

use std::collections::BTreeSet;

use ndarray::Array2;

use super::schema::{ColumnKind, SchemaConfig};
use super::table::RawTable;
use super::DataError;

/// Raw values recognized as boolean true/false, compared case-insensitively.
pub const BOOLEAN_TRUE: [&str; 5] = ["1", "true", "t", "yes", "y"];
pub const BOOLEAN_FALSE: [&str; 5] = ["0", "false", "f", "no", "n"];

/// Numeric matrix plus binary labels, ready for training.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDataset {
    pub features: Array2<f64>,
    pub labels: Vec<u8>,
    pub feature_names: Vec<String>,
}

impl PreparedDataset {
    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }
}

/// Mean and population standard deviation of one output column at fit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaler {
    pub mean: f64,
    pub std_dev: f64,
}

/// Frozen encoder of one surviving source column.
#[derive(Debug, Clone, PartialEq)]
pub enum Encoder {
    Numeric,
    Boolean {
        true_values: BTreeSet<String>,
        false_values: BTreeSet<String>,
    },
    /// Categories in first-appearance order; the value is the index, and an
    /// unseen category at apply time gets the dedicated index
    /// `categories.len()`.
    Ordinal { categories: Vec<String> },
    /// Categories in first-appearance order, one indicator column each; an
    /// unseen category at apply time yields all-zero indicators.
    OneHot { categories: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeptColumn {
    pub name: String,
    pub encoder: Encoder,
}

/// Everything needed to replay the fitted transform on new rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformState {
    pub kept_columns: Vec<KeptColumn>,
    /// Output feature names; one-hot indicators are `column_category`.
    pub feature_names: Vec<String>,
    /// One scaler per output feature, aligned with `feature_names`.
    pub scalers: Vec<Scaler>,
    pub label_column: String,
    pub label_positive_values: BTreeSet<String>,
}

fn parse_boolean(cell: &str) -> Option<bool> {
    let lower = cell.to_ascii_lowercase();
    if BOOLEAN_TRUE.contains(&lower.as_str()) {
        Some(true)
    } else if BOOLEAN_FALSE.contains(&lower.as_str()) {
        Some(false)
    } else {
        None
    }
}

fn parse_numeric(column: &str, row: usize, cell: &str) -> Result<f64, DataError> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(DataError::InvalidNumeric {
            column: column.to_string(),
            row,
            value: cell.to_string(),
        }),
    }
}

/// Distinctness key that folds -0.0 into 0.0.
fn value_key(v: f64) -> u64 {
    (if v == 0.0 { 0.0f64 } else { v }).to_bits()
}

fn require_columns(table: &RawTable, names: impl Iterator<Item = String>) -> Result<(), DataError> {
    let missing: Vec<String> = names.filter(|n| table.column_index(n).is_none()).collect();
    if !missing.is_empty() {
        return Err(DataError::MissingColumns(missing));
    }
    Ok(())
}

fn map_labels(
    table: &RawTable,
    label_column: &str,
    positive: &BTreeSet<String>,
) -> Result<Vec<u8>, DataError> {
    let idx = table
        .column_index(label_column)
        .ok_or_else(|| DataError::MissingColumns(vec![label_column.to_string()]))?;
    Ok(table.rows.iter().map(|r| u8::from(positive.contains(&r[idx]))).collect())
}

/// Builds the feature matrix from unscaled output columns and applies the
/// given scalers column by column. Fit and apply share this path so a
/// replay of the fit table reproduces the fit features bit for bit.
fn assemble(
    columns: Vec<Vec<f64>>,
    names: Vec<String>,
    scalers: &[Scaler],
    labels: Vec<u8>,
) -> PreparedDataset {
    let n = labels.len();
    let d = columns.len();
    let mut features = Array2::zeros((n, d));
    for (j, column) in columns.iter().enumerate() {
        let Scaler { mean, std_dev } = scalers[j];
        for (i, &v) in column.iter().enumerate() {
            features[[i, j]] = (v - mean) / std_dev;
        }
    }
    PreparedDataset { features, labels, feature_names: names }
}

/// Learns encoders and scaling statistics from a table and returns the
/// transformed table alongside the frozen state.
///
/// Feature columns are pruned when they contain a missing cell or fewer
/// than two distinct encoded values; surviving columns are encoded and then
/// standardized to mean 0 and population standard deviation 1.
pub fn preprocess_fit(
    table: &RawTable,
    schema: &SchemaConfig,
) -> Result<(PreparedDataset, TransformState), DataError> {
    schema.validate()?;
    if table.rows.is_empty() {
        return Err(DataError::EmptyTable);
    }
    require_columns(table, schema.columns.iter().map(|c| c.name.clone()))?;

    let labels = map_labels(table, schema.label_column(), &schema.label_positive_values)?;
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == labels.len() {
        return Err(DataError::SingleClass);
    }

    let mut kept_columns = Vec::new();
    let mut out_columns: Vec<Vec<f64>> = Vec::new();
    let mut out_names: Vec<String> = Vec::new();

    for spec in schema.feature_columns() {
        let idx = table.column_index(&spec.name).expect("checked above");
        let cells = table.column(idx);
        if cells.iter().any(|c| c.is_empty()) {
            continue;
        }
        match spec.kind {
            ColumnKind::Numeric => {
                let mut values = Vec::with_capacity(cells.len());
                for (row, cell) in cells.iter().enumerate() {
                    values.push(parse_numeric(&spec.name, row + 1, cell)?);
                }
                let distinct: BTreeSet<u64> = values.iter().map(|&v| value_key(v)).collect();
                if distinct.len() < 2 {
                    continue;
                }
                kept_columns.push(KeptColumn { name: spec.name.clone(), encoder: Encoder::Numeric });
                out_names.push(spec.name.clone());
                out_columns.push(values);
            }
            ColumnKind::Boolean => {
                let mut values = Vec::with_capacity(cells.len());
                for (row, cell) in cells.iter().enumerate() {
                    let flag = parse_boolean(cell).ok_or_else(|| DataError::InvalidBoolean {
                        column: spec.name.clone(),
                        row: row + 1,
                        value: cell.to_string(),
                    })?;
                    values.push(f64::from(u8::from(flag)));
                }
                let distinct: BTreeSet<u64> = values.iter().map(|&v| value_key(v)).collect();
                if distinct.len() < 2 {
                    continue;
                }
                kept_columns.push(KeptColumn {
                    name: spec.name.clone(),
                    encoder: Encoder::Boolean {
                        true_values: BOOLEAN_TRUE.iter().map(|s| s.to_string()).collect(),
                        false_values: BOOLEAN_FALSE.iter().map(|s| s.to_string()).collect(),
                    },
                });
                out_names.push(spec.name.clone());
                out_columns.push(values);
            }
            ColumnKind::CategoricalOrdinal => {
                let mut categories: Vec<String> = Vec::new();
                let mut values = Vec::with_capacity(cells.len());
                for cell in &cells {
                    let index = match categories.iter().position(|c| c == cell) {
                        Some(i) => i,
                        None => {
                            categories.push(cell.to_string());
                            categories.len() - 1
                        }
                    };
                    values.push(index as f64);
                }
                if categories.len() < 2 {
                    continue;
                }
                kept_columns.push(KeptColumn {
                    name: spec.name.clone(),
                    encoder: Encoder::Ordinal { categories },
                });
                out_names.push(spec.name.clone());
                out_columns.push(values);
            }
            ColumnKind::CategoricalOnehot => {
                let mut categories: Vec<String> = Vec::new();
                for cell in &cells {
                    if !categories.iter().any(|c| c == cell) {
                        categories.push(cell.to_string());
                    }
                }
                if categories.len() < 2 {
                    continue;
                }
                if categories.len() > schema.max_onehot_cardinality {
                    return Err(DataError::CardinalityExceeded {
                        column: spec.name.clone(),
                        cardinality: categories.len(),
                        limit: schema.max_onehot_cardinality,
                    });
                }
                for category in &categories {
                    out_names.push(format!("{}_{}", spec.name, category));
                    out_columns
                        .push(cells.iter().map(|c| f64::from(u8::from(c == category))).collect());
                }
                kept_columns.push(KeptColumn {
                    name: spec.name.clone(),
                    encoder: Encoder::OneHot { categories },
                });
            }
        }
    }

    if out_columns.is_empty() {
        return Err(DataError::NoFeatures);
    }

    let n = table.n_rows() as f64;
    let scalers: Vec<Scaler> = out_columns
        .iter()
        .map(|column| {
            let mean = column.iter().sum::<f64>() / n;
            let var = column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let std_dev = var.sqrt();
            debug_assert!(std_dev > 0.0, "constant columns were pruned before fitting");
            Scaler { mean, std_dev }
        })
        .collect();

    let prepared = assemble(out_columns, out_names.clone(), &scalers, labels);
    let state = TransformState {
        kept_columns,
        feature_names: out_names,
        scalers,
        label_column: schema.label_column().to_string(),
        label_positive_values: schema.label_positive_values.clone(),
    };
    Ok((prepared, state))
}

/// Replays a fitted transform on new rows with all statistics frozen.
///
/// Unseen ordinal categories map to the dedicated extra index, unseen
/// one-hot categories to all-zero indicators; a missing cell in a kept
/// column is an error.
pub fn preprocess_apply(
    table: &RawTable,
    state: &TransformState,
) -> Result<PreparedDataset, DataError> {
    if table.rows.is_empty() {
        return Err(DataError::EmptyTable);
    }
    require_columns(
        table,
        state
            .kept_columns
            .iter()
            .map(|k| k.name.clone())
            .chain(std::iter::once(state.label_column.clone())),
    )?;

    let labels = map_labels(table, &state.label_column, &state.label_positive_values)?;

    let mut out_columns: Vec<Vec<f64>> = Vec::new();
    for kept in &state.kept_columns {
        let idx = table.column_index(&kept.name).expect("checked above");
        let cells = table.column(idx);
        for (row, cell) in cells.iter().enumerate() {
            if cell.is_empty() {
                return Err(DataError::MissingValue { column: kept.name.clone(), row: row + 1 });
            }
        }
        match &kept.encoder {
            Encoder::Numeric => {
                let mut values = Vec::with_capacity(cells.len());
                for (row, cell) in cells.iter().enumerate() {
                    values.push(parse_numeric(&kept.name, row + 1, cell)?);
                }
                out_columns.push(values);
            }
            Encoder::Boolean { .. } => {
                let mut values = Vec::with_capacity(cells.len());
                for (row, cell) in cells.iter().enumerate() {
                    let flag = parse_boolean(cell).ok_or_else(|| DataError::InvalidBoolean {
                        column: kept.name.clone(),
                        row: row + 1,
                        value: cell.to_string(),
                    })?;
                    values.push(f64::from(u8::from(flag)));
                }
                out_columns.push(values);
            }
            Encoder::Ordinal { categories } => {
                let values = cells
                    .iter()
                    .map(|cell| {
                        categories
                            .iter()
                            .position(|c| c == cell)
                            .unwrap_or(categories.len()) as f64
                    })
                    .collect();
                out_columns.push(values);
            }
            Encoder::OneHot { categories } => {
                for category in categories {
                    out_columns
                        .push(cells.iter().map(|c| f64::from(u8::from(c == category))).collect());
                }
            }
        }
    }

    Ok(assemble(out_columns, state.feature_names.clone(), &state.scalers, labels))
}
