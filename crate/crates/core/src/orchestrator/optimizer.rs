use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Message;
use crate::agents::AgentRole;

/// Trailing window length used by the Optimizer.
pub const OPTIMIZER_WINDOW: u64 = 10;

/// A role is nudged once more than this share of its windowed messages repeat.
pub const REDUNDANCY_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DirectiveKind {
    InjectDirective { text: String },
    FlagLowPerformer,
    LogVariables { variables: BTreeMap<String, f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerDirective {
    pub target_role: AgentRole,
    #[serde(flatten)]
    pub kind: DirectiveKind,
    pub epoch_issued: u64,
}

/// One role's trailing-window statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub role: AgentRole,
    pub mean_score: f64,
    /// Share of the role's windowed messages that carried a repetition penalty.
    pub redundancy: f64,
}

/// Window statistics for every non-Optimizer role over epochs
/// `epoch + 1 - window ..= epoch`.
pub fn window_stats(messages: &[Message], epoch: u64, window: u64) -> Vec<WindowStats> {
    let first = (epoch + 1).saturating_sub(window.max(1));
    AgentRole::ALL
        .iter()
        .filter(|r| **r != AgentRole::Optimizer)
        .filter_map(|&role| {
            let scoped: Vec<&Message> = messages
                .iter()
                .filter(|m| m.role == role && (first..=epoch).contains(&m.epoch))
                .collect();
            if scoped.is_empty() {
                return None;
            }
            let n = scoped.len() as f64;
            Some(WindowStats {
                role,
                mean_score: scoped.iter().map(|m| m.score.clamped).sum::<f64>() / n,
                redundancy: scoped.iter().filter(|m| m.score.penalty < 0.0).count() as f64 / n,
            })
        })
        .collect()
}

/// Flags the lowest windowed mean (earliest role on ties), asks every role
/// above the redundancy threshold to stop repeating itself, and logs each
/// role's window variables.
pub fn apply_optimizer(stats: &[WindowStats], epoch: u64, anti_repetition_text: &str) -> Vec<OptimizerDirective> {
    let mut out = Vec::new();
    let lowest = stats.iter().fold(None::<&WindowStats>, |best, s| match best {
        Some(b) if b.mean_score <= s.mean_score => Some(b),
        _ => Some(s),
    });
    if let Some(s) = lowest {
        out.push(OptimizerDirective {
            target_role: s.role,
            kind: DirectiveKind::FlagLowPerformer,
            epoch_issued: epoch,
        });
    }
    for s in stats.iter().filter(|s| s.redundancy > REDUNDANCY_THRESHOLD) {
        out.push(OptimizerDirective {
            target_role: s.role,
            kind: DirectiveKind::InjectDirective {
                text: anti_repetition_text.to_string(),
            },
            epoch_issued: epoch,
        });
    }
    for s in stats {
        let variables = [
            ("window_mean".to_string(), s.mean_score),
            ("window_redundancy".to_string(), s.redundancy),
        ]
        .into_iter()
        .collect();
        out.push(OptimizerDirective {
            target_role: s.role,
            kind: DirectiveKind::LogVariables { variables },
            epoch_issued: epoch,
        });
    }
    out
}
