//! Response scoring and redundancy measurement.
//!
//! Every agent response gets four additive components: a role base score,
//! a keyword bonus, a flat repetition penalty and an epoch-driven learning
//! boost. The sum is clamped to `[0, 1]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::AgentRole;

#[derive(Debug, Error, PartialEq)]
pub enum ScoringError {
    #[error("redundancy rate of an empty response list is undefined")]
    EmptyResponses,
}

/// How keyword hits are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KeywordMode {
    /// One bonus unit per keyword occurrence.
    #[default]
    PerOccurrence,
    /// One bonus unit per distinct keyword present.
    PerDistinct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringConstants {
    pub base_analysis: f64,
    pub base_other: f64,
    pub keyword_bonus_unit: f64,
    pub keywords: Vec<String>,
    pub repetition_penalty_unit: f64,
    pub boost_scale: f64,
    pub boost_rate: f64,
    pub keyword_mode: KeywordMode,
}

impl Default for ScoringConstants {
    fn default() -> Self {
        Self {
            base_analysis: 0.02,
            base_other: 0.01,
            keyword_bonus_unit: 0.05,
            keywords: DEFAULT_KEYWORDS.iter().map(|k| k.to_string()).collect(),
            repetition_penalty_unit: 0.05,
            boost_scale: 0.5,
            boost_rate: 0.05,
            keyword_mode: KeywordMode::PerOccurrence,
        }
    }
}

pub const DEFAULT_KEYWORDS: [&str; 4] = ["crime", "hotspot", "predict", "suggest"];

impl ScoringConstants {
    /// Checks the magnitude and keyword invariants.
    pub fn validate(&self) -> Result<(), String> {
        let magnitudes = [
            ("base_analysis", self.base_analysis),
            ("base_other", self.base_other),
            ("keyword_bonus_unit", self.keyword_bonus_unit),
            ("repetition_penalty_unit", self.repetition_penalty_unit),
            ("boost_scale", self.boost_scale),
            ("boost_rate", self.boost_rate),
        ];
        for (name, v) in magnitudes {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be a finite non-negative number, got {v}"));
            }
        }
        if self.keywords.is_empty() {
            return Err("keywords must not be empty".into());
        }
        for k in &self.keywords {
            if k.is_empty() || *k != k.to_lowercase() {
                return Err(format!("keyword {k:?} must be non-empty and lowercase"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub base: f64,
    pub bonus: f64,
    pub penalty: f64,
    pub boost: f64,
    pub raw: f64,
    pub clamped: f64,
}

pub fn base_score(role: AgentRole, constants: &ScoringConstants) -> f64 {
    match role {
        AgentRole::Analysis => constants.base_analysis,
        AgentRole::Feedback | AgentRole::Predictor | AgentRole::Optimizer => constants.base_other,
    }
}

/// Lowercased word tokens. Anything that is not alphanumeric separates tokens,
/// so `"crime,"` yields `crime` while `"crimes"` stays `crimes`.
pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Keyword occurrences per configured keyword, in keyword order.
pub fn keyword_counts(text: &str, constants: &ScoringConstants) -> Vec<usize> {
    let mut counts = vec![0usize; constants.keywords.len()];
    for token in tokens(text) {
        if let Some(i) = constants.keywords.iter().position(|k| *k == token) {
            counts[i] += 1;
        }
    }
    counts
}

pub fn keyword_bonus(text: &str, constants: &ScoringConstants) -> f64 {
    let counts = keyword_counts(text, constants);
    let hits = match constants.keyword_mode {
        KeywordMode::PerOccurrence => counts.iter().sum::<usize>(),
        KeywordMode::PerDistinct => counts.iter().filter(|&&c| c > 0).count(),
    };
    constants.keyword_bonus_unit * hits as f64
}

/// Lowercase with all whitespace runs collapsed to a single space and trimmed.
pub fn normalize_response(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// `-repetition_penalty_unit` when `text` matches any prior response of the
/// same role after normalization, else `0`. The penalty is flat.
pub fn repetition_penalty<S: AsRef<str>>(
    text: &str,
    history: &[S],
    constants: &ScoringConstants,
) -> f64 {
    let needle = normalize_response(text);
    if history
        .iter()
        .any(|h| normalize_response(h.as_ref()) == needle)
    {
        -constants.repetition_penalty_unit
    } else {
        0.0
    }
}

/// `boost_scale * (1 - exp(-boost_rate * epoch))`.
pub fn learning_boost(epoch: u64, constants: &ScoringConstants) -> f64 {
    // exp_m1 keeps full precision for small exponents.
    -constants.boost_scale * (-constants.boost_rate * epoch as f64).exp_m1()
}

/// `boost_scale - learning_boost(epoch)`, evaluated directly as
/// `boost_scale * exp(-boost_rate * epoch)`.
///
/// In `f64` the boost itself reaches `boost_scale` once the remaining gap drops
/// below half an ulp (around epoch 750 with default constants); the gap stays
/// representable and strictly decreasing far beyond that.
pub fn learning_boost_gap(epoch: u64, constants: &ScoringConstants) -> f64 {
    constants.boost_scale * (-constants.boost_rate * epoch as f64).exp()
}

pub fn score_response<S: AsRef<str>>(
    role: AgentRole,
    text: &str,
    history: &[S],
    epoch: u64,
    constants: &ScoringConstants,
) -> ScoreBreakdown {
    let base = base_score(role, constants);
    let bonus = keyword_bonus(text, constants);
    let penalty = repetition_penalty(text, history, constants);
    let boost = learning_boost(epoch, constants);
    // The penalty is added last so a repeated response scores exactly
    // `fresh.raw - repetition_penalty_unit`.
    let raw = (base + bonus + boost) + penalty;
    ScoreBreakdown {
        base,
        bonus,
        penalty,
        boost,
        raw,
        clamped: raw.clamp(0.0, 1.0),
    }
}

/// Fraction of responses whose normalized form equals some earlier response.
pub fn redundancy_rate<S: AsRef<str>>(responses: &[S]) -> Result<f64, ScoringError> {
    if responses.is_empty() {
        return Err(ScoringError::EmptyResponses);
    }
    let mut seen = std::collections::HashSet::new();
    let repeats = responses
        .iter()
        .filter(|r| !seen.insert(normalize_response(r.as_ref())))
        .count();
    Ok(repeats as f64 / responses.len() as f64)
}
