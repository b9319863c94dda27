//! Offline multi-agent crime data analysis.
//!
//! The crate covers the whole loop: CSV ingestion and imputation, spatial and
//! temporal feature engineering, the Analysis/Feedback/Predictor(/Optimizer)
//! conversation driven by a pluggable text backend, response scoring, and the
//! reports written at the end of a run.

pub mod agents;
pub mod scoring;
pub mod ingest;
pub mod preprocess;
pub mod orchestrator;
pub mod reporting;

mod fsutil;
pub mod cli;
