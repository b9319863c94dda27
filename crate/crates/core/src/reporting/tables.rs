use std::path::Path;

use super::{check_series, write_file, ReportError, ScoreSeries};
use crate::agents::AgentRole;
use crate::orchestrator::Message;
use crate::scoring::{score_response, ScoringConstants};

pub const SCORES_HEADER: &str = "epoch,role,base,bonus,penalty,boost,raw,clamped";

/// `%.{digits}g`-style formatting: `digits` significant digits, trailing
/// zeros removed, exponent form outside `1e-4 ..= 10^digits`.
pub fn format_sig(v: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let fixed = format!("{:.*}", (digits as i32 - 1 - exp) as usize, v);
    trim_zeros(&fixed).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Wide table: `epoch,<role>...`, values with 9 significant digits.
pub fn score_csv(series: &[ScoreSeries]) -> Result<String, ReportError> {
    let n = check_series(series)?;
    let mut out = String::from("epoch");
    for s in series {
        out.push(',');
        out.push_str(s.role.as_str());
    }
    out.push('\n');
    for e in 0..n {
        out.push_str(&e.to_string());
        for s in series {
            out.push(',');
            out.push_str(&format_sig(s.values[e], 9));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn emit_score_csv(series: &[ScoreSeries], path: &Path) -> Result<(), ReportError> {
    write_file(path, &score_csv(series)?)
}

/// Inverse of [`score_csv`].
pub fn parse_score_csv(text: &str) -> Result<Vec<ScoreSeries>, ReportError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or(ReportError::Parse { line: 1, message: "empty file".into() })?;
    let mut cols = header.split(',');
    if cols.next() != Some("epoch") {
        return Err(ReportError::Parse { line: 1, message: "first column must be epoch".into() });
    }
    let mut series: Vec<ScoreSeries> = cols
        .map(|c| {
            c.parse::<AgentRole>()
                .map(|role| ScoreSeries { role, values: Vec::new() })
                .map_err(|e| ReportError::Parse { line: 1, message: e.to_string() })
        })
        .collect::<Result<_, _>>()?;
    for (i, line) in lines {
        let bad = |message: String| ReportError::Parse { line: i + 1, message };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != series.len() + 1 {
            return Err(bad(format!("expected {} fields, found {}", series.len() + 1, fields.len())));
        }
        let epoch: usize = fields[0].parse().map_err(|e| bad(format!("epoch: {e}")))?;
        if epoch != i - 1 {
            return Err(bad(format!("expected epoch {}, found {epoch}", i - 1)));
        }
        for (s, f) in series.iter_mut().zip(&fields[1..]) {
            s.values.push(f.parse().map_err(|e| bad(format!("{f:?}: {e}")))?);
        }
    }
    Ok(series)
}

/// Long table: one row per message with every score component, floats in
/// shortest round-trip form.
pub fn scores_csv(messages: &[Message]) -> String {
    let mut out = String::from(SCORES_HEADER);
    out.push('\n');
    for m in messages {
        let s = &m.score;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            m.epoch,
            m.role.as_str(),
            s.base,
            s.bonus,
            s.penalty,
            s.boost,
            s.raw,
            s.clamped
        ));
    }
    out
}

pub fn transcript_jsonl(messages: &[Message]) -> String {
    let mut out = String::new();
    for m in messages {
        out.push_str(&serde_json::to_string(m).expect("messages serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_transcript(text: &str) -> Result<Vec<Message>, ReportError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ReportError::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_transcript(path: &Path) -> Result<Vec<Message>, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_transcript(&text)
}

/// Recomputes every score from the stored responses under `constants`.
/// Each message is scored against the earlier responses of its role.
pub fn rescore_messages(messages: &[Message], constants: &ScoringConstants) -> Vec<Message> {
    let mut out: Vec<Message> = Vec::with_capacity(messages.len());
    for m in messages {
        let history: Vec<&str> = out
            .iter()
            .filter(|p| p.role == m.role)
            .map(|p| p.response.as_str())
            .collect();
        let score = score_response(m.role, &m.response, &history, m.epoch, constants);
        out.push(Message { score, ..m.clone() });
    }
    out
}

/// Reads a transcript file and returns the rescored per-message CSV.
pub fn rescore_transcript(path: &Path, constants: &ScoringConstants) -> Result<String, ReportError> {
    let messages = read_transcript(path)?;
    Ok(scores_csv(&rescore_messages(&messages, constants)))
}
