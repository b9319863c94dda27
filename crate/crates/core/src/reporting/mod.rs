//! Score tables, learning-curve plots, run summaries and ablation reports.

mod svg;
mod summary;
mod tables;

use std::io;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::AgentRole;
use crate::orchestrator::Message;

pub use svg::{emit_learning_curve_svg, learning_curve_svg};
pub use summary::{
    summarize_run, AblationReport, AblationRow, ArmSummary, RoleSummary, RunSummary, REDUNDANCY_METRIC,
    STABILITY_TOLERANCE,
};
pub use tables::{
    emit_score_csv, format_sig, parse_score_csv, parse_transcript, read_transcript, rescore_messages,
    rescore_transcript, score_csv, scores_csv, transcript_jsonl, SCORES_HEADER,
};

pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";
/// One row per message with every score component.
pub const SCORES_FILE: &str = "scores.csv";
/// One row per epoch, one clamped-score column per role.
pub const SERIES_FILE: &str = "series.csv";
pub const LEARNING_CURVE_FILE: &str = "learning_curve.svg";
pub const SUMMARY_FILE: &str = "summary.json";
pub const ABLATION_FILE: &str = "ablation.json";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{0}")]
    Contract(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Clamped scores of one role, indexed by epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSeries {
    pub role: AgentRole,
    pub values: Vec<f64>,
}

/// Per-role clamped-score series, in `roles` order. Every role must have
/// exactly one message per epoch `0..n`.
pub fn score_series(messages: &[Message], roles: &[AgentRole]) -> Result<Vec<ScoreSeries>, ReportError> {
    roles
        .iter()
        .map(|&role| {
            let values: Vec<f64> = messages
                .iter()
                .filter(|m| m.role == role)
                .enumerate()
                .map(|(i, m)| {
                    if m.epoch == i as u64 {
                        Ok(m.score.clamped)
                    } else {
                        Err(ReportError::Contract(format!(
                            "{role} messages are not contiguous: expected epoch {i}, found {}",
                            m.epoch
                        )))
                    }
                })
                .collect::<Result<_, _>>()?;
            Ok(ScoreSeries { role, values })
        })
        .collect()
}

pub(crate) fn check_series(series: &[ScoreSeries]) -> Result<usize, ReportError> {
    let first = series
        .first()
        .ok_or_else(|| ReportError::Contract("no score series given".into()))?;
    let n = first.values.len();
    if let Some(bad) = series.iter().find(|s| s.values.len() != n) {
        return Err(ReportError::Contract(format!(
            "series lengths differ: {} has {}, {} has {n}",
            bad.role,
            bad.values.len(),
            first.role
        )));
    }
    Ok(n)
}

pub(crate) fn write_file(path: &std::path::Path, text: &str) -> Result<(), ReportError> {
    crate::fsutil::write_atomic(path, text.as_bytes()).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}
