//! Temporal decomposition, spatial normalization, crime-zone clustering and
//! the node and relation features.

mod dbscan;
mod knn;
mod node;
mod pipeline;
mod scale;
mod temporal;

use thiserror::Error;

pub use dbscan::{cluster_count, dbscan, dbscan_brute, distance, Point, NOISE};
pub use knn::{knn_relation, knn_relation_brute};
pub use node::synthesize_node;
pub use pipeline::{
    clean_csv_bytes, run_pipeline, write_clean_csv, write_clean_jsonl, CleanRecord, PipelineConfig, PipelineSummary,
    SpatialFeatures, CLEAN_CSV_COLUMNS,
};
pub use scale::{min_max_scale, ScaleRange};
pub use temporal::{decompose_datetime, TemporalFeatures, DATE_FORMAT};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("cannot parse timestamp {0:?}")]
    Temporal(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid pipeline configuration: {0}")]
    Config(String),
    #[error("record {index}: {source}")]
    AtRecord {
        index: usize,
        #[source]
        source: Box<PreprocessError>,
    },
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<PreprocessError>,
    },
    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}
