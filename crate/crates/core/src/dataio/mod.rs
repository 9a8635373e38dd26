//! Tabular data handling: CSV loading, schema-driven preprocessing,
//! train/test splitting and horizontal client partitioning.
//!
//! The flow is fit-then-replay: `preprocess_fit` learns encoders and scaling
//! statistics from one table and `preprocess_apply` replays them frozen on
//! another, so evaluation data never leaks into the fitted statistics.

mod preprocess;
mod schema;
mod split;
mod table;

pub use preprocess::{
    preprocess_apply, preprocess_fit, Encoder, KeptColumn, PreparedDataset, Scaler,
    TransformState,
};
pub use schema::{ColumnKind, ColumnRole, ColumnSpec, SchemaConfig};
pub use split::{
    partition_clients, split_raw_stratified, split_train_test, stratified_split_indices,
    ClientPartition,
};
pub use table::{load_dataset, RawTable};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid schema: {0}")]
    SchemaInvalid(String),
    #[error("schema columns missing from file: {0:?}")]
    MissingColumns(Vec<String>),
    #[error("file columns not declared in schema: {0:?}")]
    UnknownColumns(Vec<String>),
    #[error("row {row} has {got} cells, expected {expected}")]
    RaggedRow { row: usize, expected: usize, got: usize },
    #[error("table has no data rows")]
    EmptyTable,
    #[error("column {column:?} row {row}: {value:?} is not numeric")]
    InvalidNumeric { column: String, row: usize, value: String },
    #[error("column {column:?} row {row}: {value:?} is not a recognized boolean")]
    InvalidBoolean { column: String, row: usize, value: String },
    #[error("column {column:?} row {row}: value is missing")]
    MissingValue { column: String, row: usize },
    #[error("labels contain a single class; both classes are required")]
    SingleClass,
    #[error("no feature columns survive pruning")]
    NoFeatures,
    #[error("column {column:?} has {cardinality} categories, limit is {limit}")]
    CardinalityExceeded { column: String, cardinality: usize, limit: usize },
    #[error("test fraction {0} must lie strictly between 0 and 1")]
    InvalidFraction(f64),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("class {class} has {count} samples, too few to appear in both splits")]
    ClassTooSmall { class: u8, count: usize },
    #[error("cannot partition {rows} rows across {clients} clients")]
    InvalidClientCount { clients: usize, rows: usize },
}
