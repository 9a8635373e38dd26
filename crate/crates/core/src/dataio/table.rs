//! Raw CSV tables.

use std::path::Path;

use super::schema::SchemaConfig;
use super::DataError;

/// A CSV file held as trimmed text cells. Empty cells are missing values.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    /// Borrowed view of one column, in row order.
    pub fn column(&self, index: usize) -> Vec<&str> {
        self.rows.iter().map(|r| r[index].as_str()).collect()
    }

    /// New table holding only the selected rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> RawTable {
        RawTable {
            headers: self.headers.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

/// Loads a CSV file whose header row must match the schema's columns
/// exactly as a set; column order in the file is free.
///
/// Every row must have one cell per header; the offending 1-based data row
/// is named otherwise.
pub fn load_dataset(path: &Path, schema: &SchemaConfig) -> Result<RawTable, DataError> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;

    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let missing: Vec<String> = schema
        .columns
        .iter()
        .filter(|c| !headers.contains(&c.name))
        .map(|c| c.name.clone())
        .collect();
    if !missing.is_empty() {
        return Err(DataError::MissingColumns(missing));
    }
    let unknown: Vec<String> = headers
        .iter()
        .filter(|h| !schema.columns.iter().any(|c| &c.name == *h))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(DataError::UnknownColumns(unknown));
    }

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(DataError::RaggedRow {
                row: i + 1,
                expected: headers.len(),
                got: record.len(),
            });
        }
        rows.push(record.iter().map(|c| c.trim().to_string()).collect());
    }
    if rows.is_empty() {
        return Err(DataError::EmptyTable);
    }
    Ok(RawTable { headers, rows })
}
