use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use super::digest::data_digest;
use super::optimizer::{apply_optimizer, window_stats, DirectiveKind, OPTIMIZER_WINDOW};
use super::{AgentSet, Message, OrchestratorError, RunConfig, Transcript};
use crate::agents::{
    default_template, AgentRole, BackendKind, Bindings, GenerationParams, GenerationRequest, HttpBackend,
    PromptTemplate, ScriptedBackend, TextBackend, OPTIMIZER_ANTI_REPETITION_DIRECTIVE,
};
use crate::fsutil::{ensure_writable_dir, hex, write_atomic};
use crate::ingest::load_and_clean;
use crate::preprocess::{clean_csv_bytes, run_pipeline, CleanRecord, PipelineSummary};
use crate::reporting::{
    self, learning_curve_svg, score_series, scores_csv, summarize_run, transcript_jsonl, AblationReport,
    RunSummary, ScoreSeries, ABLATION_FILE, LEARNING_CURVE_FILE, SCORES_FILE, SERIES_FILE, SUMMARY_FILE,
    TRANSCRIPT_FILE,
};
use crate::scoring::{score_response, ScoringConstants};

/// Mutable state carried across epochs.
#[derive(Debug, Clone)]
pub struct RunState {
    roles: &'static [AgentRole],
    data_summary: String,
    templates: BTreeMap<AgentRole, PromptTemplate>,
    params: GenerationParams,
    scoring: ScoringConstants,
    messages: Vec<Message>,
}

impl RunState {
    pub fn new(config: &RunConfig, data_summary: String) -> Self {
        let roles = config.agent_set.roles();
        Self {
            roles,
            data_summary,
            templates: roles.iter().map(|&r| (r, default_template(r))).collect(),
            params: config.effective_generation(),
            scoring: config.scoring.clone(),
            messages: Vec::new(),
        }
    }

    pub fn roles(&self) -> &'static [AgentRole] {
        self.roles
    }

    pub fn template(&self, role: AgentRole) -> Option<&PromptTemplate> {
        self.templates.get(&role)
    }

    /// Every message of the completed epochs.
    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn into_messages(self) -> Vec<Message> {
        self.messages
    }

    fn history(&self, role: AgentRole) -> Vec<&str> {
        self.messages
            .iter()
            .filter(|m| m.role == role)
            .map(|m| m.response.as_str())
            .collect()
    }

    fn previous_score(&self, role: AgentRole, epoch: u64) -> Option<f64> {
        let prev = epoch.checked_sub(1)?;
        self.messages
            .iter()
            .find(|m| m.role == role && m.epoch == prev)
            .map(|m| m.score.clamped)
    }

    fn turn(
        &self,
        backend: &mut dyn TextBackend,
        role: AgentRole,
        epoch: u64,
        bindings: &Bindings,
    ) -> Result<Message, OrchestratorError> {
        let template = &self.templates[&role];
        let (system, user) = template
            .render_parts(bindings, epoch)
            .map_err(|source| OrchestratorError::Template { role, source })?;
        let request = GenerationRequest {
            role,
            epoch,
            system: &system,
            user: &user,
            params: &self.params,
        };
        let started = Instant::now();
        let response = backend
            .generate(&request)
            .map_err(|source| OrchestratorError::Backend { epoch, role, source })?;
        let wall_time_ms = if backend.records_wall_time() {
            started.elapsed().as_millis() as u64
        } else {
            0
        };
        let score = score_response(role, &response, &self.history(role), epoch, &self.scoring);
        log::debug!("epoch {epoch} {role}: clamped {:.4}", score.clamped);
        Ok(Message {
            epoch,
            role,
            prompt: request.prompt(),
            response,
            score,
            wall_time_ms,
            directives: Vec::new(),
        })
    }

    /// Template refinement and Optimizer directives, applied once an epoch
    /// completes so they only affect later epochs.
    fn advance(&mut self, epoch: u64, produced: &[Message]) {
        for m in produced {
            let prev = self.previous_score(m.role, epoch).unwrap_or(m.score.clamped);
            let refined = self.templates[&m.role].refine(m.score.clamped, prev, m.score.penalty < 0.0);
            self.templates.insert(m.role, refined);
        }
        for d in produced.iter().flat_map(|m| &m.directives) {
            let Some(t) = self.templates.get_mut(&d.target_role) else {
                continue;
            };
            match &d.kind {
                DirectiveKind::InjectDirective { text } => {
                    t.push_directive(text);
                }
                DirectiveKind::FlagLowPerformer => {
                    t.push_next_pool_directive();
                }
                DirectiveKind::LogVariables { variables } => {
                    log::debug!("epoch {epoch} {}: {variables:?}", d.target_role);
                }
            }
        }
    }
}

fn bind(pairs: &[(&str, &str)]) -> Bindings {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// Runs one conversation cycle and records its messages in `state`.
///
/// On a backend failure nothing from the aborted epoch is kept.
pub fn run_epoch(
    state: &mut RunState,
    backend: &mut dyn TextBackend,
    epoch: u64,
) -> Result<Vec<Message>, OrchestratorError> {
    let analysis = state.turn(
        backend,
        AgentRole::Analysis,
        epoch,
        &bind(&[("data_summary", &state.data_summary)]),
    )?;
    let feedback = state.turn(
        backend,
        AgentRole::Feedback,
        epoch,
        &bind(&[("analysis", &analysis.response)]),
    )?;
    let prediction = state.turn(
        backend,
        AgentRole::Predictor,
        epoch,
        &bind(&[("analysis", &analysis.response), ("feedback", &feedback.response)]),
    )?;
    let mut produced = vec![analysis, feedback, prediction];

    if state.roles.contains(&AgentRole::Optimizer) {
        let mut upto: Vec<Message> = state.messages.clone();
        upto.extend(produced.iter().cloned());
        let stats = window_stats(&upto, epoch, OPTIMIZER_WINDOW);
        let mut scores = String::new();
        for (m, s) in produced.iter().zip(&stats) {
            let _ = writeln!(
                scores,
                "{}: score {:.4}, window mean {:.4}, window redundancy {:.4}",
                m.role.agent_name(),
                m.score.clamped,
                s.mean_score,
                s.redundancy
            );
        }
        let bindings = bind(&[
            ("scores", scores.trim_end()),
            ("analysis", &produced[0].response),
            ("feedback", &produced[1].response),
            ("prediction", &produced[2].response),
        ]);
        let mut optimizer = state.turn(backend, AgentRole::Optimizer, epoch, &bindings)?;
        optimizer.directives = apply_optimizer(&stats, epoch, OPTIMIZER_ANTI_REPETITION_DIRECTIVE);
        produced.push(optimizer);
    }

    state.messages.extend(produced.iter().cloned());
    state.advance(epoch, &produced);
    Ok(produced)
}

/// Cleaned, feature-engineered data plus its digest and content hash.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub records: Vec<CleanRecord>,
    pub summary: PipelineSummary,
    pub digest: String,
    /// SHA-256 of the clean-record CSV.
    pub hash: String,
}

pub fn prepare_data(config: &RunConfig) -> Result<PreparedData, OrchestratorError> {
    let pruned = load_and_clean(&config.dataset_path)?;
    let (records, summary) = run_pipeline(&pruned, &config.pipeline)?;
    let hash = hex(&Sha256::digest(clean_csv_bytes(&records)));
    let digest = data_digest(&records, &summary);
    Ok(PreparedData {
        records,
        summary,
        digest,
        hash,
    })
}

pub fn build_backend(config: &RunConfig) -> Result<Box<dyn TextBackend>, OrchestratorError> {
    match &config.backend {
        BackendKind::Scripted { seed, schedule } => Ok(Box::new(ScriptedBackend::new(
            seed.unwrap_or(config.seed),
            schedule.clone().unwrap_or_default(),
        ))),
        BackendKind::Http(http) => HttpBackend::new(http.clone())
            .map(|b| Box::new(b) as Box<dyn TextBackend>)
            .map_err(|e| OrchestratorError::Config(e.to_string())),
    }
}

/// Everything a run leaves behind, also persisted under `output_dir`.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub transcript: Transcript,
    pub series: Vec<ScoreSeries>,
    pub summary: RunSummary,
    pub pipeline: PipelineSummary,
    pub data_hash: String,
    pub output_dir: PathBuf,
}

fn run_id(config: &RunConfig) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    hex(&Sha256::digest(json))[..16].to_string()
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), OrchestratorError> {
    let path = dir.join(name);
    write_atomic(&path, bytes).map_err(|source| OrchestratorError::Io { path, source })
}

fn persist_messages(dir: &Path, messages: &[Message]) -> Result<(), OrchestratorError> {
    write(dir, TRANSCRIPT_FILE, transcript_jsonl(messages).as_bytes())?;
    write(dir, SCORES_FILE, scores_csv(messages).as_bytes())
}

/// Preprocesses the dataset, runs every epoch with the configured backend and
/// writes the run artifacts.
pub fn run_experiment(config: &RunConfig) -> Result<RunArtifacts, OrchestratorError> {
    config.validate()?;
    let mut backend = build_backend(config)?;
    run_experiment_with_backend(config, backend.as_mut())
}

/// [`run_experiment`] with a caller-supplied backend; `config.backend` is
/// recorded but not used.
pub fn run_experiment_with_backend(
    config: &RunConfig,
    backend: &mut dyn TextBackend,
) -> Result<RunArtifacts, OrchestratorError> {
    config.validate()?;
    let dir = config.output_dir.clone();
    ensure_writable_dir(&dir).map_err(|source| OrchestratorError::Io {
        path: dir.clone(),
        source,
    })?;
    let data = prepare_data(config)?;
    log::info!(
        "{} records, {} clusters; running {} epochs",
        data.summary.record_count,
        data.summary.cluster_count,
        config.epochs
    );

    let mut state = RunState::new(config, data.digest.clone());
    for epoch in 0..config.epochs {
        if let Err(e) = run_epoch(&mut state, backend, epoch) {
            log::error!("run halted at epoch {epoch}; flushing {} messages", state.messages().len());
            persist_messages(&dir, state.messages())?;
            return Err(e);
        }
    }

    let transcript = Transcript {
        run_id: run_id(config),
        config_snapshot: config.clone(),
        messages: state.into_messages(),
    };
    let series = score_series(&transcript.messages, config.agent_set.roles())?;
    let mut summary = summarize_run(&transcript)?;
    summary.data_hash = Some(data.hash.clone());

    persist_messages(&dir, &transcript.messages)?;
    write(&dir, SERIES_FILE, reporting::score_csv(&series)?.as_bytes())?;
    write(&dir, LEARNING_CURVE_FILE, learning_curve_svg(&series)?.as_bytes())?;
    write(&dir, SUMMARY_FILE, summary.to_json_pretty().as_bytes())?;

    Ok(RunArtifacts {
        transcript,
        series,
        summary,
        pipeline: data.summary,
        data_hash: data.hash,
        output_dir: dir,
    })
}

/// Runs the three-agent baseline and the four-agent arm under the same seed,
/// data and epoch count, in `output_dir/baseline` and `output_dir/extended`,
/// and writes the comparison to `output_dir/ablation.json`.
pub fn run_ablation(config: &RunConfig) -> Result<AblationReport, OrchestratorError> {
    config.validate()?;
    let arm = |label: &'static str, set: AgentSet| {
        let arm_config = RunConfig {
            agent_set: set,
            output_dir: config.output_dir.join(label),
            ..config.clone()
        };
        run_experiment(&arm_config).map_err(|e| OrchestratorError::Arm {
            arm: label,
            source: Box::new(e),
        })
    };
    let baseline = arm("baseline", AgentSet::ThreeAgent)?;
    let extended = arm("extended", AgentSet::FourAgent)?;
    let report = AblationReport::new(&baseline.summary, &extended.summary);
    write(&config.output_dir, ABLATION_FILE, report.to_json_pretty().as_bytes())?;
    Ok(report)
}
