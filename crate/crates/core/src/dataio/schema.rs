//! Dataset schema: which columns exist, how each is typed, and how the raw
//! label maps to the binary target.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DataError;

/// How a column's raw text becomes numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    CategoricalOnehot,
    CategoricalOrdinal,
    Boolean,
}

/// What a column is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    Feature,
    Label,
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(default = "default_kind")]
    pub kind: ColumnKind,
    #[serde(default = "default_role")]
    pub role: ColumnRole,
}

fn default_kind() -> ColumnKind {
    ColumnKind::Numeric
}

fn default_role() -> ColumnRole {
    ColumnRole::Feature
}

fn default_cardinality() -> usize {
    128
}

/// Declarative description of one CSV dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaConfig {
    pub columns: Vec<ColumnSpec>,
    /// Raw label values mapped to class 1 (anomalous); everything else is 0.
    pub label_positive_values: BTreeSet<String>,
    /// A one-hot column with more categories than this is refused.
    #[serde(default = "default_cardinality")]
    pub max_onehot_cardinality: usize,
}

impl SchemaConfig {
    pub fn from_json(text: &str) -> Result<Self, DataError> {
        let schema: SchemaConfig = serde_json::from_str(text)
            .map_err(|e| DataError::SchemaInvalid(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_path(path: &Path) -> Result<Self, DataError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.columns.is_empty() {
            return Err(DataError::SchemaInvalid("no columns declared".into()));
        }
        let mut seen = BTreeSet::new();
        for column in &self.columns {
            if column.name.is_empty() {
                return Err(DataError::SchemaInvalid("empty column name".into()));
            }
            if !seen.insert(column.name.as_str()) {
                return Err(DataError::SchemaInvalid(format!(
                    "duplicate column name {:?}",
                    column.name
                )));
            }
        }
        let labels: Vec<&str> = self
            .columns
            .iter()
            .filter(|c| c.role == ColumnRole::Label)
            .map(|c| c.name.as_str())
            .collect();
        if labels.len() != 1 {
            return Err(DataError::SchemaInvalid(format!(
                "exactly one label column is required, found {}",
                labels.len()
            )));
        }
        if !self.columns.iter().any(|c| c.role == ColumnRole::Feature) {
            return Err(DataError::SchemaInvalid("no feature columns declared".into()));
        }
        if self.label_positive_values.is_empty() {
            return Err(DataError::SchemaInvalid("label_positive_values is empty".into()));
        }
        if self.max_onehot_cardinality == 0 {
            return Err(DataError::SchemaInvalid("max_onehot_cardinality must be positive".into()));
        }
        Ok(())
    }

    pub fn label_column(&self) -> &str {
        &self
            .columns
            .iter()
            .find(|c| c.role == ColumnRole::Label)
            .expect("validated: exactly one label")
            .name
    }

    pub fn feature_columns(&self) -> impl Iterator<Item = &ColumnSpec> {
        self.columns.iter().filter(|c| c.role == ColumnRole::Feature)
    }

    /// Maps a raw label cell to the binary target.
    pub fn map_label(&self, raw: &str) -> u8 {
        u8::from(self.label_positive_values.contains(raw))
    }
}
