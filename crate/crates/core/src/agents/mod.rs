//! Agent roles, prompt templates and text-generation backends.

mod http;
mod scripted;
mod template;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{http_generate, ChatMessage, ChatRequest, HttpBackend, HttpConfig, DEFAULT_BACKOFF_BASE, ENDPOINT_ENV};
pub use scripted::{scripted_generate, KeywordStep, RepeatSchedule, ScriptedBackend, ScriptedSchedule};
pub use template::{
    default_template, directive_pool, refine_template, render_prompt, Bindings, PromptTemplate, TemplateError,
    ANTI_REPETITION_DIRECTIVE, OPTIMIZER_ANTI_REPETITION_DIRECTIVE,
};

/// The four agent personas. Declaration order is the speaking order within an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Analysis,
    Feedback,
    Predictor,
    Optimizer,
}

impl AgentRole {
    pub const ALL: [AgentRole; 4] = [
        AgentRole::Analysis,
        AgentRole::Feedback,
        AgentRole::Predictor,
        AgentRole::Optimizer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentRole::Analysis => "analysis",
            AgentRole::Feedback => "feedback",
            AgentRole::Predictor => "predictor",
            AgentRole::Optimizer => "optimizer",
        }
    }

    /// Human-facing agent name used in plots and reports.
    pub fn agent_name(self) -> &'static str {
        match self {
            AgentRole::Analysis => "CrimeAnalysisAssistant",
            AgentRole::Feedback => "FeedbackAgent",
            AgentRole::Predictor => "CrimePredictorAgent",
            AgentRole::Optimizer => "LearningOptimizerAgent",
        }
    }
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AgentRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentRole::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s.trim()) || r.agent_name() == s.trim())
            .ok_or_else(|| format!("unknown agent role {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub max_tokens: u32,
    pub temperature: f64,
    pub seed: u64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            max_tokens: 512,
            temperature: 0.7,
            seed: 0,
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_tokens < 1 {
            return Err("max_tokens must be at least 1".into());
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(format!("temperature must be >= 0, got {}", self.temperature));
        }
        Ok(())
    }
}

/// Which text generator drives the agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendKind {
    Scripted {
        /// Falls back to the run seed when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        schedule: Option<ScriptedSchedule>,
    },
    Http(HttpConfig),
}

impl Default for BackendKind {
    fn default() -> Self {
        BackendKind::Scripted {
            seed: None,
            schedule: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend unavailable after {attempts} attempt(s): {reason}")]
    Unavailable { attempts: u32, reason: String },
    #[error("request rejected with HTTP {status}: {body}")]
    Request { status: u16, body: String },
    #[error("malformed response body: {excerpt}")]
    Protocol { excerpt: String },
    #[error("invalid backend configuration: {0}")]
    Config(String),
}

/// One generation call as seen by a backend.
#[derive(Debug, Clone, Copy)]
pub struct GenerationRequest<'a> {
    pub role: AgentRole,
    pub epoch: u64,
    pub system: &'a str,
    pub user: &'a str,
    pub params: &'a GenerationParams,
}

impl GenerationRequest<'_> {
    /// The flattened prompt text: system part, blank line, user part.
    pub fn prompt(&self) -> String {
        format!("{}\n\n{}", self.system, self.user)
    }
}

pub trait TextBackend {
    fn generate(&mut self, request: &GenerationRequest<'_>) -> Result<String, BackendError>;

    /// Whether transcripts should record measured latency. Deterministic
    /// backends report zero so artifacts stay byte-stable.
    fn records_wall_time(&self) -> bool {
        true
    }
}
