//! Deterministic stand-in for a language model.
//!
//! Output is a pure function of `(seed, role, epoch, prompt)`. Fresh responses
//! carry an epoch tag and a scheduled number of scoring keywords. With a
//! probability that decays over the run the generator instead falls back to a
//! fixed generic response for the role, which repeats verbatim once emitted
//! twice. Anti-repetition directives in the system prompt damp that probability.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::template::{ANTI_REPETITION_DIRECTIVE, OPTIMIZER_ANTI_REPETITION_DIRECTIVE};
use super::{AgentRole, BackendError, GenerationRequest, TextBackend};

const DEFAULT_SCHEDULE_JSON: &str = include_str!("../../fixtures/scripted_schedule.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeywordStep {
    pub from_epoch: u64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepeatSchedule {
    /// Fallback probability at epoch 0.
    pub start: f64,
    /// Fallback probability from `ramp_epochs` on.
    pub end: f64,
    pub ramp_epochs: u64,
    /// Multiplier applied while the role's prompt carries the anti-repetition directive.
    pub anti_repetition_factor: f64,
    /// Multiplier applied while the prompt carries the optimizer's directive.
    pub optimizer_factor: f64,
}

impl RepeatSchedule {
    pub const NEVER: RepeatSchedule = RepeatSchedule {
        start: 0.0,
        end: 0.0,
        ramp_epochs: 1,
        anti_repetition_factor: 1.0,
        optimizer_factor: 1.0,
    };

    /// Linear ramp from `start` to `end`.
    pub fn base_probability(&self, epoch: u64) -> f64 {
        let ramp = self.ramp_epochs.max(1);
        let t = epoch.min(ramp) as f64 / ramp as f64;
        self.start + (self.end - self.start) * t
    }

    pub fn probability(&self, epoch: u64, system_prompt: &str) -> f64 {
        let mut p = self.base_probability(epoch);
        if system_prompt.contains(ANTI_REPETITION_DIRECTIVE) {
            p *= self.anti_repetition_factor;
        }
        if system_prompt.contains(OPTIMIZER_ANTI_REPETITION_DIRECTIVE) {
            p *= self.optimizer_factor;
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedSchedule {
    pub keywords: Vec<String>,
    /// Sorted by `from_epoch`; the first step must start at epoch 0.
    pub keyword_steps: Vec<KeywordStep>,
    pub repeat: RepeatSchedule,
}

impl Default for ScriptedSchedule {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_SCHEDULE_JSON).expect("bundled scripted schedule is valid JSON")
    }
}

impl ScriptedSchedule {
    /// The bundled schedule with repetition switched off.
    pub fn non_repeating() -> Self {
        Self {
            repeat: RepeatSchedule::NEVER,
            ..Self::default()
        }
    }

    pub fn keyword_count(&self, epoch: u64) -> usize {
        self.keyword_steps
            .iter()
            .take_while(|s| s.from_epoch <= epoch)
            .last()
            .map_or(0, |s| s.count)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.keywords.is_empty() {
            return Err("scripted schedule needs at least one keyword".into());
        }
        if self.keyword_steps.first().map(|s| s.from_epoch) != Some(0) {
            return Err("first keyword step must start at epoch 0".into());
        }
        if self
            .keyword_steps
            .windows(2)
            .any(|w| w[0].from_epoch >= w[1].from_epoch)
        {
            return Err("keyword steps must be strictly increasing in from_epoch".into());
        }
        let r = &self.repeat;
        for (name, v) in [
            ("start", r.start),
            ("end", r.end),
            ("anti_repetition_factor", r.anti_repetition_factor),
            ("optimizer_factor", r.optimizer_factor),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("repeat.{name} must lie in [0, 1], got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    seed: u64,
    schedule: ScriptedSchedule,
}

impl ScriptedBackend {
    pub fn new(seed: u64, schedule: ScriptedSchedule) -> Self {
        Self { seed, schedule }
    }

    pub fn schedule(&self) -> &ScriptedSchedule {
        &self.schedule
    }

    /// Generates the response for one turn. `system` is inspected for
    /// anti-repetition directives; the whole prompt feeds the phrase choice.
    pub fn respond(&self, role: AgentRole, epoch: u64, system: &str, prompt: &str) -> String {
        let draw = unit_draw(self.seed, role, epoch);
        if draw < self.schedule.repeat.probability(epoch, system) {
            return generic_response(role).to_string();
        }
        self.fresh_response(role, epoch, prompt)
    }

    fn fresh_response(&self, role: AgentRole, epoch: u64, prompt: &str) -> String {
        let prompt_hash = Sha256::digest(prompt.as_bytes());
        let mut rng = rng_for(self.seed, role, epoch, "fresh", &prompt_hash);
        let bank = phrase_bank(role);

        let mut sentences: Vec<String> = Vec::new();
        sentences.push(format!("Round {epoch} notes."));
        sentences.push(bank.openers.choose(&mut rng).expect("non-empty bank").to_string());

        let keywords = &self.schedule.keywords;
        let offset = rng.gen_range(0..keywords.len());
        for i in 0..self.schedule.keyword_count(epoch) {
            let keyword = &keywords[(offset + i) % keywords.len()];
            let frame = KEYWORD_FRAMES.choose(&mut rng).expect("non-empty frames");
            let area = AREAS.choose(&mut rng).expect("non-empty areas");
            sentences.push(
                frame
                    .replace("{kw}", keyword)
                    .replace("{area}", area)
                    .replace("{n}", &rng.gen_range(2..40).to_string()),
            );
        }
        let fillers = rng.gen_range(1..=2);
        for filler in bank.fillers.choose_multiple(&mut rng, fillers) {
            sentences.push(filler.to_string());
        }
        sentences.join(" ")
    }
}

impl TextBackend for ScriptedBackend {
    fn generate(&mut self, request: &GenerationRequest<'_>) -> Result<String, BackendError> {
        Ok(self.respond(request.role, request.epoch, request.system, &request.prompt()))
    }

    fn records_wall_time(&self) -> bool {
        false
    }
}

/// Bundled-schedule generation for a bare prompt. The whole prompt is
/// treated as the system part for directive detection.
pub fn scripted_generate(seed: u64, role: AgentRole, epoch: u64, prompt: &str) -> String {
    ScriptedBackend::new(seed, ScriptedSchedule::default()).respond(role, epoch, prompt, prompt)
}

fn rng_for(seed: u64, role: AgentRole, epoch: u64, stream: &str, extra: &[u8]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"lucid-scripted\0");
    h.update(stream.as_bytes());
    h.update(seed.to_le_bytes());
    h.update(role.as_str().as_bytes());
    h.update(epoch.to_le_bytes());
    h.update(extra);
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(key)
}

/// Uniform draw in [0, 1) that depends only on seed, role and epoch.
fn unit_draw(seed: u64, role: AgentRole, epoch: u64) -> f64 {
    rng_for(seed, role, epoch, "repeat", &[]).gen::<f64>()
}

/// The fallback response. Contains no scoring keywords and no epoch tag.
fn generic_response(role: AgentRole) -> &'static str {
    match role {
        AgentRole::Analysis => "The dataset covers many incidents across the city. Activity differs between areas and between times of day.",
        AgentRole::Feedback => "The analysis is reasonable overall but could go into more detail.",
        AgentRole::Predictor => "Incident levels will probably stay close to what recent years showed.",
        AgentRole::Optimizer => "All agents are progressing. No adjustments are needed this round.",
    }
}

struct PhraseBank {
    openers: &'static [&'static str],
    fillers: &'static [&'static str],
}

fn phrase_bank(role: AgentRole) -> PhraseBank {
    match role {
        AgentRole::Analysis => PhraseBank {
            openers: &[
                "Theft and battery remain the most frequent categories in the summary.",
                "Incident counts peak in the late evening and fall to a minimum before dawn.",
                "The largest spatial clusters sit on the south and west sides.",
                "Weekend nights show a visible rise over weekday nights.",
            ],
            fillers: &[
                "Arrest rates stay low for property offences.",
                "Narcotics incidents concentrate along a few corridors.",
                "Residential streets account for a large share of reports.",
                "Summer months carry more incidents than winter months.",
            ],
        },
        AgentRole::Feedback => PhraseBank {
            openers: &[
                "Flaw: the analysis leans on city-wide totals without breaking them down by area.",
                "Strength: the analysis ties the hourly peak to specific clusters.",
                "Missing element: there is no comparison between months.",
                "Flaw: the category ranking lacks counts for the smaller groups.",
            ],
            fillers: &[
                "Labels on the hourly chart would help readers.",
                "A weekday versus weekend split would add depth.",
                "Arrest outcomes deserve a separate paragraph.",
                "The noise points from clustering should be discussed.",
            ],
        },
        AgentRole::Predictor => PhraseBank {
            openers: &[
                "Expect an uptick in vehicle thefts after payday weekends in central zones.",
                "Late evening incidents near transit stops are likely to continue rising.",
                "Entertainment districts face a weekend surge during the summer months.",
                "Residential burglary risk grows during weekday working hours.",
            ],
            fillers: &[
                "Targeted patrols around the largest clusters are advisable.",
                "Street lighting upgrades could reduce night-time incidents.",
                "Community outreach may lower repeat offences.",
                "Resources should shift toward the late evening shift.",
            ],
        },
        AgentRole::Optimizer => PhraseBank {
            openers: &[
                "The lowest trailing mean belongs to one agent and is logged below.",
                "Score gaps between agents narrowed during the last window.",
                "One agent shows signs of redundant output in the window.",
            ],
            fillers: &[
                "Window means and redundancy figures are recorded for the next round.",
                "Adjustments take effect from the following epoch.",
                "No agent is removed from the loop.",
            ],
        },
    }
}

/// Sentence frames that each contain exactly one keyword slot.
const KEYWORD_FRAMES: &[&str] = &[
    "Cluster {n} in {area} stands out in the {kw} figures.",
    "The {kw} signal around {area} keeps growing, with {n} reports last period.",
    "Around {area}, the {kw} pattern repeats across {n} blocks.",
    "Looking at {area}, the data point to {kw} as the term to track for {n} weeks.",
];

const AREAS: &[&str] = &[
    "Englewood",
    "Austin",
    "Uptown",
    "Rogers Park",
    "the Loop",
    "Humboldt Park",
    "West Garfield Park",
    "Near North Side",
];
