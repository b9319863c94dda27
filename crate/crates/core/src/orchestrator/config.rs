use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::OrchestratorError;
use crate::agents::{AgentRole, BackendKind, GenerationParams};
use crate::preprocess::PipelineConfig;
use crate::scoring::ScoringConstants;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentSet {
    /// Analysis, Feedback, Predictor.
    #[default]
    ThreeAgent,
    /// The three base roles plus the Optimizer.
    FourAgent,
}

impl AgentSet {
    pub fn roles(self) -> &'static [AgentRole] {
        match self {
            AgentSet::ThreeAgent => &AgentRole::ALL[..3],
            AgentSet::FourAgent => &AgentRole::ALL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub epochs: u64,
    pub agent_set: AgentSet,
    /// Seeds the scripted backend (unless it names its own) and every
    /// generation request.
    pub seed: u64,
    pub backend: BackendKind,
    pub generation: GenerationParams,
    pub scoring: ScoringConstants,
    pub pipeline: PipelineConfig,
    pub dataset_path: PathBuf,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            agent_set: AgentSet::ThreeAgent,
            seed: 0,
            backend: BackendKind::default(),
            generation: GenerationParams::default(),
            scoring: ScoringConstants::default(),
            pipeline: PipelineConfig::default(),
            dataset_path: PathBuf::from("crimes.csv"),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, OrchestratorError> {
        serde_json::from_str(text).map_err(|e| OrchestratorError::Config(format!("run config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, OrchestratorError> {
        let text = std::fs::read_to_string(path).map_err(|source| OrchestratorError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        let err = |m: String| Err(OrchestratorError::Config(m));
        if self.epochs < 1 {
            return err("epochs must be at least 1".into());
        }
        if self.dataset_path.as_os_str().is_empty() {
            return err("dataset_path is empty".into());
        }
        if self.output_dir.as_os_str().is_empty() {
            return err("output_dir is empty".into());
        }
        self.generation.validate().map_err(OrchestratorError::Config)?;
        self.scoring.validate().map_err(OrchestratorError::Config)?;
        self.pipeline
            .validate()
            .map_err(|e| OrchestratorError::Config(e.to_string()))?;
        match &self.backend {
            BackendKind::Scripted { schedule, .. } => {
                if let Some(s) = schedule {
                    s.validate().map_err(OrchestratorError::Config)?;
                }
            }
            BackendKind::Http(http) => http.validate().map_err(|e| OrchestratorError::Config(e.to_string()))?,
        }
        Ok(())
    }

    /// Generation parameters with the request seed taken from the run seed.
    pub fn effective_generation(&self) -> GenerationParams {
        GenerationParams {
            seed: self.seed,
            ..self.generation.clone()
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
