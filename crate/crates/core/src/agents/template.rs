use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::AgentRole;

/// Appended when a role repeats one of its earlier responses.
pub const ANTI_REPETITION_DIRECTIVE: &str = "Do not repeat the content. Be constructive.";

/// Injected by the optimizer when a role stays redundant over its window.
pub const OPTIMIZER_ANTI_REPETITION_DIRECTIVE: &str =
    "Your recent answers restate earlier ones word for word. Write new content that adds information not given before.";

pub type Bindings = BTreeMap<String, String>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("placeholder {{{0}}} has no binding")]
    Unbound(String),
    #[error("unterminated placeholder starting at byte {0}")]
    Unterminated(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub role: AgentRole,
    pub system_text: String,
    pub user_text_pattern: String,
    #[serde(default)]
    pub directives: Vec<String>,
}

impl PromptTemplate {
    /// System text followed by every accumulated directive, in insertion order.
    pub fn system_with_directives(&self) -> String {
        let mut out = self.system_text.clone();
        for d in &self.directives {
            out.push(' ');
            out.push_str(d);
        }
        out
    }

    /// Renders the system and user halves separately.
    pub fn render_parts(&self, bindings: &Bindings, epoch: u64) -> Result<(String, String), TemplateError> {
        let user = substitute(&self.user_text_pattern, bindings, epoch)?;
        Ok((self.system_with_directives(), user))
    }

    /// Appends `directive` unless already present. Returns whether it was added.
    pub fn push_directive(&mut self, directive: &str) -> bool {
        if self.directives.iter().any(|d| d == directive) {
            return false;
        }
        self.directives.push(directive.to_string());
        true
    }

    /// Directive-pool refinement after an epoch.
    ///
    /// A repetition adds the anti-repetition directive; a score decline adds the
    /// next unused entry of the role's pool. Otherwise the template is unchanged.
    pub fn refine(&self, last_score: f64, prev_score: f64, repetition_flag: bool) -> PromptTemplate {
        let mut next = self.clone();
        if repetition_flag {
            next.push_directive(ANTI_REPETITION_DIRECTIVE);
        }
        if last_score < prev_score {
            next.push_next_pool_directive();
        }
        next
    }

    /// Appends the first pool directive not yet present, if any remain.
    pub fn push_next_pool_directive(&mut self) -> bool {
        match directive_pool(self.role)
            .iter()
            .find(|d| !self.directives.iter().any(|x| x == *d))
        {
            Some(d) => self.push_directive(d),
            None => false,
        }
    }
}

/// Free-function form of [`PromptTemplate::refine`].
pub fn refine_template(template: &PromptTemplate, last_score: f64, prev_score: f64, repetition_flag: bool) -> PromptTemplate {
    template.refine(last_score, prev_score, repetition_flag)
}

/// Renders `template` to a single prompt text: system text with directives,
/// a blank line, then the substituted user pattern.
pub fn render_prompt(template: &PromptTemplate, bindings: &Bindings, epoch: u64) -> Result<String, TemplateError> {
    let (system, user) = template.render_parts(bindings, epoch)?;
    Ok(format!("{system}\n\n{user}"))
}

/// Single-pass `{name}` substitution; `{{` and `}}` are literal braces.
/// `{epoch}` is bound from `epoch` unless the caller overrides it.
fn substitute(pattern: &str, bindings: &Bindings, epoch: u64) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(pattern.len() + 64);
    let mut rest = pattern;
    let mut offset = 0;
    while let Some(pos) = rest.find(['{', '}']) {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        if tail.starts_with("{{") || tail.starts_with("}}") {
            out.push_str(&tail[..1]);
            rest = &tail[2..];
            offset += pos + 2;
            continue;
        }
        if let Some(after) = tail.strip_prefix('}') {
            out.push('}');
            rest = after;
            offset += pos + 1;
            continue;
        }
        let end = tail.find('}').ok_or(TemplateError::Unterminated(offset + pos))?;
        let name = &tail[1..end];
        match bindings.get(name) {
            Some(v) => out.push_str(v),
            None if name == "epoch" => out.push_str(&epoch.to_string()),
            None => return Err(TemplateError::Unbound(name.to_string())),
        }
        rest = &tail[end + 1..];
        offset += pos + end + 1;
    }
    out.push_str(rest);
    Ok(out)
}

/// Corrective directives a role's template draws from, in order, when its score declines.
pub fn directive_pool(role: AgentRole) -> &'static [&'static str] {
    match role {
        AgentRole::Analysis => &[
            "Avoid vague summaries.",
            "Name the specific areas and hours where incidents concentrate.",
            "Support every pattern with counts from the data summary.",
            "Contrast weekday and weekend activity.",
        ],
        AgentRole::Feedback => &[
            "Point to concrete gaps instead of restating the analysis.",
            "Label each remark as a flaw, a strength or a missing element.",
            "Propose one actionable improvement per flaw.",
        ],
        AgentRole::Predictor => &[
            "Anchor every forecast to a time window and a location.",
            "Recommend a preventive intervention for each forecast.",
            "State which observed pattern each forecast relies on.",
        ],
        AgentRole::Optimizer => &[
            "Name the weakest agent and the metric behind that judgement.",
            "List concrete adjustments and keep the report short.",
        ],
    }
}

/// The starting template for each role.
pub fn default_template(role: AgentRole) -> PromptTemplate {
    let (system, user) = match role {
        AgentRole::Analysis => (
            "You are a crime data analyst working with the Chicago incident records. Identify spatial and temporal patterns in the data.",
            "Epoch {epoch}. Analyze the crime trends in the dataset.\n\nData summary:\n{data_summary}",
        ),
        AgentRole::Feedback => (
            "You are a feedback evaluator. Review the crime analysis below critically and report flaws, strengths and missing elements.",
            "Epoch {epoch}.\n\nAnalysis:\n{analysis}\n\nFeedback:",
        ),
        AgentRole::Predictor => (
            "You are a crime forecaster. Forecast future hotspots and high-risk periods from the analysis and its review, and recommend interventions.",
            "Epoch {epoch}.\n\nAnalysis:\n{analysis}\n\nFeedback:\n{feedback}\n\nPrediction:",
        ),
        AgentRole::Optimizer => (
            "You supervise a team of crime analysis agents. Review their scores, identify weak performers and log the variables needed to adjust them.",
            "Epoch {epoch}.\n\nScores:\n{scores}\n\nAnalysis:\n{analysis}\n\nFeedback:\n{feedback}\n\nPrediction:\n{prediction}\n\nReport:",
        ),
    };
    PromptTemplate {
        role,
        system_text: system.to_string(),
        user_text_pattern: user.to_string(),
        directives: Vec::new(),
    }
}
