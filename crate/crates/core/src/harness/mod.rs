//! Interchange I/O, profile aggregation, fold construction, benchmark
//! orchestration and report emission.

mod config;
mod folds;
mod profiles;
mod report;
mod run;
mod table;

use std::path::PathBuf;

use thiserror::Error;

use crate::evalmetrics::MetricError;
use crate::regress::RegressError;

pub use config::{BenchmarkKind, Inputs, MetricParams, ProfileSpec, RunConfig};
pub use folds::{make_folds, FoldScheme, FoldSpec};
pub use profiles::{build_profiles, center_table, Aggregate, Center};
pub use report::{emit_report, emit_reports, RawValue, Report, ReportFormat, ScoreSummary};
pub use run::{read_labels_csv, read_targets_csv, run_benchmark, write_run_outputs, TargetTable};
pub use table::{read_table, table_paths, write_atomic, write_table, EmbeddingTable, Manifest};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("unsupported interchange version {0}")]
    Version(u32),
    #[error("unsupported dtype {0:?}")]
    Dtype(String),
    #[error("manifest lists {ids} ids but n_items = {n_items}")]
    CountMismatch { ids: usize, n_items: usize },
    #[error("payload has {got} bytes, expected {expected}")]
    PayloadSize { expected: u64, got: u64 },
    #[error("non-finite value in row {row} ({item_id}), column {col}")]
    NonFinite { row: usize, item_id: String, col: usize },
    #[error("duplicate item id {0:?}")]
    DuplicateId(String),
    #[error("embedding dimension must be positive")]
    ZeroDim,
    #[error("row {row} has {len} values, expected {dim}")]
    RaggedRow { row: usize, len: usize, dim: usize },
    #[error("metadata: {0}")]
    Meta(String),
    #[error("item {item:?} has no metadata key {key:?}")]
    MissingMetaKey { key: String, item: String },
    #[error("plates without negative controls: {0:?}")]
    PlatesWithoutControls(Vec<String>),
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Regress(#[from] RegressError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    /// Process exit status for the CLI: 2 for configuration problems, 3 for
    /// everything that went wrong with the data.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_)
            | HarnessError::Metric(MetricError::InvalidParameter(_))
            | HarnessError::Regress(RegressError::InvalidParameter(_)) => 2,
            _ => 3,
        }
    }
}
