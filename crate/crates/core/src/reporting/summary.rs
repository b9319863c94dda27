use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ReportError;
use crate::agents::AgentRole;
use crate::orchestrator::{AgentSet, RunConfig, Transcript};
use crate::scoring::redundancy_rate;

/// Consecutive-epoch score change below which a role counts as stable.
pub const STABILITY_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleSummary {
    pub role: AgentRole,
    pub agent: String,
    pub initial_score: f64,
    pub final_score: f64,
    /// `final_score - initial_score`.
    pub improvement: f64,
    pub redundancy_rate: f64,
    /// Whether the last epoch moved the score by less than the stability tolerance.
    pub stable_at_end: bool,
    /// First epoch from which every consecutive change stays below the tolerance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stable_from_epoch: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub epochs: u64,
    pub agent_set: AgentSet,
    pub roles: Vec<RoleSummary>,
    /// Mean redundancy over the Analysis, Feedback and Predictor roles.
    pub average_redundancy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_hash: Option<String>,
    pub config: RunConfig,
}

impl RunSummary {
    pub fn role(&self, role: AgentRole) -> Option<&RoleSummary> {
        self.roles.iter().find(|r| r.role == role)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

fn stable_from(values: &[f64]) -> Option<u64> {
    let mut from = None;
    for e in 1..values.len() {
        if (values[e] - values[e - 1]).abs() < STABILITY_TOLERANCE {
            from.get_or_insert(e as u64);
        } else {
            from = None;
        }
    }
    from
}

/// Initial and final clamped score, improvement and redundancy per role.
pub fn summarize_run(transcript: &Transcript) -> Result<RunSummary, ReportError> {
    if transcript.messages.is_empty() {
        return Err(ReportError::Contract("transcript has no messages".into()));
    }
    let mut roles: Vec<AgentRole> = transcript.messages.iter().map(|m| m.role).collect();
    roles.sort();
    roles.dedup();
    let series = super::score_series(&transcript.messages, &roles)?;
    let epochs = super::check_series(&series)? as u64;

    let mut out = Vec::new();
    for s in &series {
        let responses: Vec<&str> = transcript
            .messages
            .iter()
            .filter(|m| m.role == s.role)
            .map(|m| m.response.as_str())
            .collect();
        let initial = s.values[0];
        let last = *s.values.last().expect("non-empty series");
        let final_delta = if s.values.len() > 1 { last - s.values[s.values.len() - 2] } else { 0.0 };
        out.push(RoleSummary {
            role: s.role,
            agent: s.role.agent_name().to_string(),
            initial_score: initial,
            final_score: last,
            improvement: last - initial,
            redundancy_rate: redundancy_rate(&responses).map_err(|e| ReportError::Contract(e.to_string()))?,
            stable_at_end: final_delta.abs() < STABILITY_TOLERANCE,
            stable_from_epoch: stable_from(&s.values),
        });
    }
    let base: Vec<f64> = out
        .iter()
        .filter(|r| r.role != AgentRole::Optimizer)
        .map(|r| r.redundancy_rate)
        .collect();
    let average_redundancy = base.iter().sum::<f64>() / base.len().max(1) as f64;
    Ok(RunSummary {
        run_id: transcript.run_id.clone(),
        epochs,
        agent_set: transcript.config_snapshot.agent_set,
        roles: out,
        average_redundancy,
        data_hash: None,
        config: transcript.config_snapshot.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub agent_set: AgentSet,
    pub run_id: String,
    pub final_scores: BTreeMap<AgentRole, f64>,
    pub average_redundancy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_hash: Option<String>,
}

impl ArmSummary {
    fn of(summary: &RunSummary) -> Self {
        Self {
            agent_set: summary.agent_set,
            run_id: summary.run_id.clone(),
            final_scores: summary
                .roles
                .iter()
                .filter(|r| r.role != AgentRole::Optimizer)
                .map(|r| (r.role, r.final_score))
                .collect(),
            average_redundancy: summary.average_redundancy,
            data_hash: summary.data_hash.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub metric: String,
    pub baseline: f64,
    pub extended: f64,
    /// Score rows: `extended - baseline`. Redundancy row: `baseline - extended`.
    pub improvement: f64,
}

/// Baseline (three agents) versus extended (with the Optimizer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub epochs: u64,
    pub seed: u64,
    pub baseline: ArmSummary,
    pub extended: ArmSummary,
    pub rows: Vec<AblationRow>,
    pub same_data: bool,
}

pub const REDUNDANCY_METRIC: &str = "Avg. redundancy across epochs";

impl AblationReport {
    pub fn new(baseline: &RunSummary, extended: &RunSummary) -> Self {
        let (b, x) = (ArmSummary::of(baseline), ArmSummary::of(extended));
        let mut rows = Vec::new();
        for role in [AgentRole::Analysis, AgentRole::Feedback, AgentRole::Predictor] {
            let (bv, xv) = (
                b.final_scores.get(&role).copied().unwrap_or(f64::NAN),
                x.final_scores.get(&role).copied().unwrap_or(f64::NAN),
            );
            rows.push(AblationRow {
                metric: format!("{} final score", role.agent_name()),
                baseline: bv,
                extended: xv,
                improvement: xv - bv,
            });
        }
        rows.push(AblationRow {
            metric: REDUNDANCY_METRIC.to_string(),
            baseline: b.average_redundancy,
            extended: x.average_redundancy,
            improvement: b.average_redundancy - x.average_redundancy,
        });
        Self {
            epochs: baseline.epochs,
            seed: baseline.config.seed,
            same_data: b.data_hash.is_some() && b.data_hash == x.data_hash,
            baseline: b,
            extended: x,
            rows,
        }
    }

    pub fn redundancy_row(&self) -> &AblationRow {
        self.rows.last().expect("report always has rows")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
