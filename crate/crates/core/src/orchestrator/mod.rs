//! The per-epoch conversation loop, run artifacts and the 3-vs-4 agent ablation.

mod config;
mod digest;
mod optimizer;
mod run;

use std::io;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentRole, BackendError, TemplateError};
use crate::ingest::IngestError;
use crate::preprocess::PreprocessError;
use crate::reporting::ReportError;
use crate::scoring::ScoreBreakdown;

pub use config::{AgentSet, RunConfig};
pub use digest::data_digest;
pub use optimizer::{
    apply_optimizer, window_stats, DirectiveKind, OptimizerDirective, WindowStats, OPTIMIZER_WINDOW,
    REDUNDANCY_THRESHOLD,
};
pub use run::{
    build_backend, prepare_data, run_ablation, run_epoch, run_experiment, run_experiment_with_backend, PreparedData,
    RunArtifacts, RunState,
};

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("preprocessing failed: {0}")]
    Preprocess(#[from] PreprocessError),
    #[error("{role} template: {source}")]
    Template {
        role: AgentRole,
        #[source]
        source: TemplateError,
    },
    #[error("epoch {epoch}, {role} agent: {source}")]
    Backend {
        epoch: u64,
        role: AgentRole,
        #[source]
        source: BackendError,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{arm} arm: {source}")]
    Arm {
        arm: &'static str,
        #[source]
        source: Box<OrchestratorError>,
    },
}

/// One agent turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub epoch: u64,
    pub role: AgentRole,
    pub prompt: String,
    pub response: String,
    pub score: ScoreBreakdown,
    /// Zero for deterministic backends.
    pub wall_time_ms: u64,
    /// Issued by the Optimizer; empty for every other role.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub directives: Vec<OptimizerDirective>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub run_id: String,
    pub config_snapshot: RunConfig,
    /// Ordered by epoch, then by speaking order.
    pub messages: Vec<Message>,
}
