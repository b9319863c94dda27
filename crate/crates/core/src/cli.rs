//! Command-line front end. Every subcommand is a thin wrapper over library calls.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::agents::{BackendKind, HttpConfig, ENDPOINT_ENV};
use crate::fsutil::{ensure_writable_dir, write_atomic};
use crate::ingest::load_and_clean;
use crate::orchestrator::{run_ablation, run_experiment, AgentSet, RunConfig};
use crate::preprocess::{run_pipeline, write_clean_csv, write_clean_jsonl, PipelineConfig};
use crate::reporting::{
    emit_learning_curve_svg, parse_score_csv, rescore_transcript, ScoreSeries, SCORES_HEADER,
};
use crate::scoring::{KeywordMode, ScoringConstants};

pub const CLEAN_CSV_FILE: &str = "clean_records.csv";
pub const CLEAN_JSONL_FILE: &str = "clean_records.jsonl";
pub const PREPROCESS_SUMMARY_FILE: &str = "preprocess_summary.json";
const DEFAULT_MODEL: &str = "llama-2-13b-chat";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "lucid", version, about = "Offline multi-agent crime data analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean a raw crime CSV and write feature-engineered records.
    Preprocess(PreprocessArgs),
    /// Run the agent conversation for the configured number of epochs.
    Run(RunArgs),
    /// Run the three-agent and four-agent arms and compare them.
    Ablate(RunArgs),
    /// Recompute scores from a transcript without calling any backend.
    #[command(alias = "rescore")]
    Score(ScoreArgs),
    /// Draw a learning-curve SVG from a score CSV.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub min_pts: Option<usize>,
    #[arg(long)]
    pub precision: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BackendChoice {
    Scripted,
    Http,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AgentsChoice {
    Three,
    Four,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendChoice>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<u64>,
    #[arg(long, value_enum)]
    pub agents: Option<AgentsChoice>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Base URL of an OpenAI-compatible server (HTTP backend).
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Print the merged configuration as JSON and exit.
    #[arg(long)]
    pub effective_config: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KeywordModeChoice {
    PerOccurrence,
    PerDistinct,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub transcript: PathBuf,
    /// Take scoring constants from this run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub keyword_mode: Option<KeywordModeChoice>,
    #[arg(long)]
    pub boost_scale: Option<f64>,
    #[arg(long)]
    pub boost_rate: Option<f64>,
    #[arg(long)]
    pub keyword_bonus: Option<f64>,
    #[arg(long)]
    pub repetition_penalty: Option<f64>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Per-message scores.csv or per-epoch series.csv.
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

/// Merges defaults, the config file, the endpoint environment variable and
/// command-line flags, in increasing order of precedence.
pub fn effective_config(args: &RunArgs, env: &dyn Fn(&str) -> Option<String>) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path).map_err(domain)?,
        None => RunConfig::default(),
    };
    if let Some(endpoint) = env(ENDPOINT_ENV) {
        if let BackendKind::Http(http) = &mut cfg.backend {
            http.endpoint = endpoint;
        }
    }
    match args.backend {
        Some(BackendChoice::Scripted) if !matches!(cfg.backend, BackendKind::Scripted { .. }) => {
            cfg.backend = BackendKind::default();
        }
        Some(BackendChoice::Http) if !matches!(cfg.backend, BackendKind::Http(_)) => {
            let endpoint = env(ENDPOINT_ENV).unwrap_or_default();
            cfg.backend = BackendKind::Http(HttpConfig::new(endpoint, DEFAULT_MODEL));
        }
        _ => {}
    }
    if let BackendKind::Http(http) = &mut cfg.backend {
        if let Some(e) = &args.endpoint {
            http.endpoint = e.clone();
        }
        if let Some(m) = &args.model {
            http.model_name = m.clone();
        }
    } else if args.endpoint.is_some() || args.model.is_some() {
        return Err(CliError::Usage("--endpoint and --model need the http backend".into()));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(epochs) = args.epochs {
        cfg.epochs = epochs;
    }
    if let Some(agents) = args.agents {
        cfg.agent_set = match agents {
            AgentsChoice::Three => AgentSet::ThreeAgent,
            AgentsChoice::Four => AgentSet::FourAgent,
        };
    }
    if let Some(d) = &args.dataset {
        cfg.dataset_path = d.clone();
    }
    if let Some(o) = &args.output {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn preprocess(args: &PreprocessArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let defaults = PipelineConfig::default();
    let config = PipelineConfig {
        k_neighbors: args.k.unwrap_or(defaults.k_neighbors),
        dbscan_eps: args.eps.unwrap_or(defaults.dbscan_eps),
        dbscan_min_pts: args.min_pts.unwrap_or(defaults.dbscan_min_pts),
        node_precision: args.precision.unwrap_or(defaults.node_precision),
    };
    config.validate().map_err(domain)?;
    ensure_writable_dir(&args.output).map_err(|e| domain(format!("{}: {e}", args.output.display())))?;
    let pruned = load_and_clean(&args.input).map_err(domain)?;
    let (records, summary) = run_pipeline(&pruned, &config).map_err(domain)?;
    write_clean_csv(&args.output.join(CLEAN_CSV_FILE), &records).map_err(domain)?;
    write_clean_jsonl(&args.output.join(CLEAN_JSONL_FILE), &records).map_err(domain)?;
    let path = args.output.join(PREPROCESS_SUMMARY_FILE);
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_atomic(&path, json.as_bytes()).map_err(|e| domain(format!("{}: {e}", path.display())))?;
    let _ = writeln!(
        out,
        "{} records, {} clusters, noise {:.4} -> {}",
        summary.record_count,
        summary.cluster_count,
        summary.noise_fraction,
        args.output.display()
    );
    Ok(())
}

fn run(args: &RunArgs, env: &dyn Fn(&str) -> Option<String>, out: &mut dyn Write, ablate: bool) -> Result<(), CliError> {
    let cfg = effective_config(args, env)?;
    if args.effective_config {
        let _ = writeln!(out, "{}", cfg.to_json_pretty());
        return Ok(());
    }
    cfg.validate().map_err(domain)?;
    if ablate {
        let report = run_ablation(&cfg).map_err(domain)?;
        let _ = writeln!(out, "{:<44} {:>9} {:>9} {:>12}", "metric", "baseline", "extended", "improvement");
        for row in &report.rows {
            let _ = writeln!(
                out,
                "{:<44} {:>9.4} {:>9.4} {:>+12.4}",
                row.metric, row.baseline, row.extended, row.improvement
            );
        }
    } else {
        let art = run_experiment(&cfg).map_err(domain)?;
        let _ = writeln!(out, "run {} ({} epochs) -> {}", art.summary.run_id, art.summary.epochs, art.output_dir.display());
        for r in &art.summary.roles {
            let _ = writeln!(
                out,
                "{:<24} initial {:.4} final {:.4} redundancy {:.4}",
                r.agent, r.initial_score, r.final_score, r.redundancy_rate
            );
        }
    }
    Ok(())
}

fn score(args: &ScoreArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut k = match &args.config {
        Some(p) => RunConfig::load(p).map_err(domain)?.scoring,
        None => ScoringConstants::default(),
    };
    if let Some(m) = args.keyword_mode {
        k.keyword_mode = match m {
            KeywordModeChoice::PerOccurrence => KeywordMode::PerOccurrence,
            KeywordModeChoice::PerDistinct => KeywordMode::PerDistinct,
        };
    }
    if let Some(v) = args.boost_scale {
        k.boost_scale = v;
    }
    if let Some(v) = args.boost_rate {
        k.boost_rate = v;
    }
    if let Some(v) = args.keyword_bonus {
        k.keyword_bonus_unit = v;
    }
    if let Some(v) = args.repetition_penalty {
        k.repetition_penalty_unit = v;
    }
    k.validate().map_err(CliError::Domain)?;
    let csv = rescore_transcript(&args.transcript, &k).map_err(|e| domain(format!("{}: {e}", args.transcript.display())))?;
    match &args.output {
        Some(p) => write_atomic(p, csv.as_bytes()).map_err(|e| domain(format!("{}: {e}", p.display()))),
        None => out.write_all(csv.as_bytes()).map_err(domain),
    }
}

/// Reads either the per-epoch wide table or the per-message table.
fn load_series(path: &Path) -> Result<Vec<ScoreSeries>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| domain(format!("{}: {e}", path.display())))?;
    if text.lines().next() != Some(SCORES_HEADER) {
        return parse_score_csv(&text).map_err(|e| domain(format!("{}: {e}", path.display())));
    }
    let mut series: Vec<ScoreSeries> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || domain(format!("{}: line {}: malformed score row", path.display(), i + 1));
        if f.len() != 8 {
            return Err(bad());
        }
        let role = f[1].parse().map_err(|_| bad())?;
        let clamped: f64 = f[7].parse().map_err(|_| bad())?;
        match series.iter_mut().find(|s| s.role == role) {
            Some(s) => s.values.push(clamped),
            None => series.push(ScoreSeries { role, values: vec![clamped] }),
        }
    }
    series.sort_by_key(|s| s.role);
    Ok(series)
}

fn plot(args: &PlotArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let series = load_series(&args.scores)?;
    emit_learning_curve_svg(&series, &args.output).map_err(domain)?;
    let _ = writeln!(out, "{}", args.output.display());
    Ok(())
}

/// Parses `args` and runs the chosen subcommand. Returns the exit code:
/// 0 on success, 1 on domain errors, 2 on usage errors.
pub fn run_cli<I, T>(args: I, env: &dyn Fn(&str) -> Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Preprocess(a) => preprocess(a, out),
        Command::Run(a) => run(a, env, out, false),
        Command::Ablate(a) => run(a, env, out, true),
        Command::Score(a) => score(a, out),
        Command::Plot(a) => plot(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Process entry point: logs to standard error, reads the real environment.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let env = |k: &str| std::env::var(k).ok();
    run_cli(std::env::args_os(), &env, &mut std::io::stdout(), &mut std::io::stderr())
}
